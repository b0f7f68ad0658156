/**
 * Extra traversal time delta(k) overlaid across runs, legend from file names.
 *
 * usage: node dist/delta_overlay.js <run1.csv> [run2.csv ...] <out.svg>
 */

import { column, parseCsv, readCsv, runLabel } from "./csv";
import { cliMain, renderSvg, writeSvg } from "./render";
import { NamedTable } from "./queue_plot";

export function deltaOverlayOption(runs: NamedTable[]) {
    if (runs.length === 0) {
        throw new Error("need at least one run CSV");
    }
    const peak = Math.max(...runs.map(({ table }) => Math.max(...column(table, "delta_s"))));
    return {
        title: {
            text: "Extra traversal time",
            subtext: `worst peak ${peak.toFixed(1)} s`,
            left: "center",
        },
        legend: { top: 50 },
        grid: { left: 70, right: 30, top: 90, bottom: 60 },
        xAxis: {
            type: "value" as const,
            name: "interval k",
            nameLocation: "middle" as const,
            nameGap: 30,
            min: "dataMin",
            max: "dataMax",
        },
        yAxis: {
            type: "value" as const,
            name: "delta [s]",
            nameLocation: "middle" as const,
            nameGap: 45,
        },
        series: runs.map(({ name, table }) => {
            const k = column(table, "k");
            return {
                type: "line" as const,
                name,
                showSymbol: false,
                data: column(table, "delta_s").map((d, i) => [k[i], d]),
            };
        }),
    };
}

export function renderDeltaOverlay(csvs: { name: string; text: string }[]): string {
    const runs = csvs.map(({ name, text }) => ({ name, table: parseCsv(text) }));
    return renderSvg(deltaOverlayOption(runs) as never);
}

if (require.main === module) {
    cliMain("delta_overlay", "<run1.csv> [run2.csv ...] <out.svg>", 1, (inputs, out) => {
        const runs = inputs.map((p) => ({ name: runLabel(p), table: readCsv(p) }));
        writeSvg(out, renderSvg(deltaOverlayOption(runs) as never));
    });
}
