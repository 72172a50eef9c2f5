/** CSV tables as emitted by the run directory: a header line naming the
 * columns, then numeric rows (the `kind` column of trajectories.csv is the
 * one string column). No quoting, no escapes; the writer never produces
 * either. */

export class SchemaError extends Error {}

export interface Table {
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string, source: string): Table {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const columns = (lines[0] as string).split(",").map((c) => c.trim());
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = (lines[i] as string).split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${source}: row ${i} has ${cells.length} cells, header has ` +
          `${columns.length}`,
      );
    }
    rows.push(cells);
  }
  return { columns, rows };
}

/** Index of a required column; the error names the column that is missing. */
export function columnIndex(table: Table, name: string, source: string): number {
  const i = table.columns.indexOf(name);
  if (i < 0) {
    throw new SchemaError(
      `${source}: missing column "${name}" (found: ${table.columns.join(", ")})`,
    );
  }
  return i;
}

/** One column as numbers; the error names the column and the bad row. */
export function numericColumn(
  table: Table,
  name: string,
  source: string,
): Float64Array {
  const ci = columnIndex(table, name, source);
  const out = new Float64Array(table.rows.length);
  for (let r = 0; r < table.rows.length; r++) {
    const cell = (table.rows[r] as string[])[ci] as string;
    const v = Number(cell);
    if (!Number.isFinite(v)) {
      throw new SchemaError(
        `${source}: column "${name}" row ${r + 1}: ${JSON.stringify(cell)} ` +
          `is not a finite number`,
      );
    }
    out[r] = v;
  }
  return out;
}

export function stringColumn(
  table: Table,
  name: string,
  source: string,
): string[] {
  const ci = columnIndex(table, name, source);
  return table.rows.map((row) => row[ci] as string);
}
