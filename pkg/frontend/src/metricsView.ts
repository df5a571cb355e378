/** Metrics display: parse the server CSV into a sortable table model.
 * Display only; no client-side aggregation. */

export interface MetricsTable {
  columns: string[];
  rows: (string | number)[][];
}

export function parseMetricsCsv(csv: string): MetricsTable {
  const lines = csv.trim().split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) return { columns: [], rows: [] };
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => {
    const parts = line.split(",");
    // task names may contain commas; numeric fields are the last five
    const tail = parts.slice(-5).map(Number);
    const task = parts.slice(0, parts.length - 5).join(",");
    return [task, ...tail];
  });
  return { columns, rows };
}

export function sortTable(table: MetricsTable, column: number,
                          descending = false): MetricsTable {
  const rows = [...table.rows].sort((a, b) => {
    const x = a[column];
    const y = b[column];
    const cmp = typeof x === "number" && typeof y === "number"
      ? x - y
      : String(x).localeCompare(String(y));
    return descending ? -cmp : cmp;
  });
  return { columns: table.columns, rows };
}
