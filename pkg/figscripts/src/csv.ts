import fs from "fs";

export interface Table {
    columns: string[];
    rows: number[][];
}

/** Parse the simulator's numeric CSVs (header row + float cells). */
export function parseCsv(text: string): Table {
    const lines = text.split("\n").filter((l) => l.trim().length > 0);
    if (lines.length < 2) {
        throw new Error("CSV has no data rows");
    }
    const columns = lines[0].split(",").map((c) => c.trim());
    const rows = lines.slice(1).map((line, i) => {
        const cells = line.split(",");
        if (cells.length !== columns.length) {
            throw new Error(`row ${i + 1}: ${cells.length} cells for ${columns.length} columns`);
        }
        return cells.map(Number);
    });
    return { columns, rows };
}

export function readCsv(path: string): Table {
    return parseCsv(fs.readFileSync(path, "utf-8"));
}

/** Extract one column by name; throws a readable error when missing. */
export function column(table: Table, name: string): number[] {
    const idx = table.columns.indexOf(name);
    if (idx < 0) {
        throw new Error(`missing column '${name}' (have: ${table.columns.join(", ")})`);
    }
    return table.rows.map((r) => r[idx]);
}

export function hasColumn(table: Table, name: string): boolean {
    return table.columns.includes(name);
}

/** Label for a legend entry derived from the CSV file name. */
export function runLabel(path: string): string {
    const base = path.split(/[\\/]/).pop() ?? path;
    return base.replace(/\.csv$/i, "");
}
