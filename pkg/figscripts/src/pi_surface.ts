/**
 * Heat-map of the peak-congestion reduction index over the sweep grid:
 * dwell time on the x axis, pull-in split ratio on the y axis, pi as color.
 *
 * usage: node dist/pi_surface.js <sweep.csv> <out.svg>
 */

import { column, parseCsv, readCsv, Table } from "./csv";
import { cliMain, renderSvg, writeSvg } from "./render";

export function piSurfaceOption(table: Table) {
    const betas = column(table, "beta_s");
    const deltas = column(table, "delta_min");
    const pis = column(table, "pi");

    const xs = [...new Set(deltas)].sort((a, b) => a - b);
    const ys = [...new Set(betas)].sort((a, b) => a - b);
    const data = pis.map((pi, i) => [
        xs.indexOf(deltas[i]),
        ys.indexOf(betas[i]),
        Number(pi.toFixed(4)),
    ]);
    const lo = Math.min(...pis);
    const hi = Math.max(...pis);

    return {
        title: { text: "Peak congestion reduction", left: "center" },
        grid: { left: 90, right: 110, top: 60, bottom: 70 },
        xAxis: {
            type: "category" as const,
            data: xs.map(String),
            name: "dwell [min]",
            nameLocation: "middle" as const,
            nameGap: 35,
        },
        yAxis: {
            type: "category" as const,
            data: ys.map(String),
            name: "station split ratio",
            nameLocation: "middle" as const,
            nameGap: 55,
        },
        visualMap: {
            min: lo,
            max: hi === lo ? lo + 1e-9 : hi,
            calculable: true,
            orient: "vertical" as const,
            right: 10,
            top: "center",
            inRange: { color: ["#1d3557", "#457b9d", "#a8dadc", "#f1faee", "#e63946"] },
        },
        series: [
            {
                type: "heatmap" as const,
                data,
                label: { show: true },
                emphasis: { disabled: true },
            },
        ],
    };
}

export function renderPiSurface(csvText: string): string {
    return renderSvg(piSurfaceOption(parseCsv(csvText)) as never);
}

if (require.main === module) {
    cliMain("pi_surface", "<sweep.csv> <out.svg>", 1, (inputs, out) => {
        writeSvg(out, renderSvg(piSurfaceOption(readCsv(inputs[0])) as never));
    });
}
