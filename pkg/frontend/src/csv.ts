/**
 * CSV reader for the experiment logs: leading "# key=value" comment lines
 * carry provenance (config hash, artifact version), then one header row.
 */

import { readFileSync } from "fs";

export class MissingColumn extends Error {
  constructor(public readonly column: string, path: string) {
    super(`missing column '${column}' in ${path}`);
    this.name = "MissingColumn";
  }
}

export class EmptyData extends Error {
  constructor(path: string) {
    super(`no data rows in ${path}`);
    this.name = "EmptyData";
  }
}

export interface Table {
  path: string;
  meta: Record<string, string>;
  columns: string[];
  rows: Record<string, string>[];
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf-8");
  const meta: Record<string, string> = {};
  const rows: Record<string, string>[] = [];
  let columns: string[] | null = null;
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trimEnd();
    if (line === "") continue;
    if (line.startsWith("#")) {
      for (const token of line.slice(1).trim().split(/\s+/)) {
        const eq = token.indexOf("=");
        if (eq > 0) meta[token.slice(0, eq)] = token.slice(eq + 1);
      }
      continue;
    }
    const cells = line.split(",");
    if (columns === null) {
      columns = cells;
      continue;
    }
    const row: Record<string, string> = {};
    columns.forEach((c, i) => (row[c] = cells[i] ?? ""));
    rows.push(row);
  }
  if (columns === null || rows.length === 0) throw new EmptyData(path);
  return { path, meta, columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const c of needed) {
    if (!table.columns.includes(c)) throw new MissingColumn(c, table.path);
  }
}

export function numeric(table: Table, column: string): number[] {
  requireColumns(table, [column]);
  return table.rows.map((r) => Number(r[column]));
}
