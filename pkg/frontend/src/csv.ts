import { readFileSync } from "node:fs";

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split("\n").filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  const header = lines[0].split(",");
  const rows: string[][] = [];
  for (const ln of lines.slice(1)) {
    const parts = ln.split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(`row has ${parts.length} fields, header has ${header.length}`);
    }
    rows.push(parts);
  }
  return { header, rows };
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`cannot read ${path}: ${err}`);
  }
  return parseCsv(text);
}

/** Numeric column by name; empty fields become null. */
export function column(table: Table, name: string): (number | null)[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column ${name}`);
  }
  return table.rows.map((row) => {
    const v = row[idx];
    if (v === "") return null;
    const x = Number(v);
    if (Number.isNaN(x)) {
      throw new SchemaError(`non-numeric value ${v} in column ${name}`);
    }
    return x;
  });
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).filter((v): v is number => v !== null);
}
