/**
 * Station exit-queue evolution e(k) overlaid across runs (one per CSV),
 * with a scaled upstream-demand reference as a dashed gray line.
 *
 * usage: node dist/queue_plot.js <run1.csv> [run2.csv ...] <out.svg>
 */

import { column, parseCsv, readCsv, runLabel, Table } from "./csv";
import { cliMain, renderSvg, writeSvg } from "./render";

export interface NamedTable {
    name: string;
    table: Table;
}

export function queuePlotOption(runs: NamedTable[]) {
    if (runs.length === 0) {
        throw new Error("need at least one run CSV");
    }
    const k = column(runs[0].table, "k");
    const series: object[] = runs.map(({ name, table }) => ({
        type: "line" as const,
        name,
        showSymbol: false,
        data: column(table, "e_1").map((e, i) => [k[i], e]),
    }));

    // dashed reference: the first run's arrival flow scaled to the queue axis
    const phi = column(runs[0].table, "phi_1");
    const eMax = Math.max(...runs.map(({ table }) => Math.max(...column(table, "e_1"))));
    const phiMax = Math.max(...phi);
    const scale = phiMax > 0 ? (eMax > 0 ? eMax : 1) / phiMax : 0;
    series.push({
        type: "line" as const,
        name: "inflow (scaled)",
        showSymbol: false,
        lineStyle: { type: "dashed" as const, color: "#888" },
        itemStyle: { color: "#888" },
        data: phi.map((v, i) => [k[i], v * scale]),
    });

    return {
        title: { text: "Vehicles waiting to merge back", left: "center" },
        legend: { top: 30 },
        grid: { left: 70, right: 30, top: 70, bottom: 60 },
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
            name: "queue [veh]",
            nameLocation: "middle" as const,
            nameGap: 45,
        },
        series,
    };
}

export function renderQueuePlot(csvs: { name: string; text: string }[]): string {
    const runs = csvs.map(({ name, text }) => ({ name, table: parseCsv(text) }));
    return renderSvg(queuePlotOption(runs) as never);
}

if (require.main === module) {
    cliMain("queue_plot", "<run1.csv> [run2.csv ...] <out.svg>", 1, (inputs, out) => {
        const runs = inputs.map((p) => ({ name: runLabel(p), table: readCsv(p) }));
        writeSvg(out, renderSvg(queuePlotOption(runs) as never));
    });
}
