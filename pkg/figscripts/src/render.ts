import * as echarts from "echarts";
import fs from "fs";

export const WIDTH = 900;
export const HEIGHT = 600;

/** Render an echarts option to an SVG string (server-side, no DOM). */
export function renderSvg(option: echarts.EChartsOption): string {
    const chart = echarts.init(null, null, {
        renderer: "svg",
        ssr: true,
        width: WIDTH,
        height: HEIGHT,
    });
    chart.setOption({ animation: false, ...option });
    const svg = chart.renderToSVGString();
    chart.dispose();
    // the renderer numbers its CSS classes per chart instance; normalize so
    // identical input yields byte-identical files
    return svg.replace(/zr\d+-/g, "zr-");
}

export function writeSvg(path: string, svg: string): void {
    fs.writeFileSync(path, svg, "utf-8");
}

/** Shared CLI wrapper: parse args as [input CSVs..., output image]. */
export function cliMain(
    name: string,
    usage: string,
    minInputs: number,
    run: (inputs: string[], out: string) => void,
): void {
    const args = process.argv.slice(2);
    if (args.length < minInputs + 1) {
        console.error(`usage: ${name} ${usage}`);
        process.exit(1);
    }
    const out = args[args.length - 1];
    const inputs = args.slice(0, -1);
    try {
        run(inputs, out);
    } catch (err) {
        console.error(`${name}: ${err instanceof Error ? err.message : err}`);
        process.exit(1);
    }
    console.log(`wrote ${out}`);
}
