/**
 * CSV artifact reading.
 *
 * Artifacts are consumed strictly by header name, never by column
 * position, and every schema problem is reported with the full list of
 * columns that were actually found so a mismatched file can be
 * diagnosed from the error message alone.
 */

import Papa from "papaparse";

export class SchemaError extends Error {}

export interface Artifact {
  columns: string[];
  rows: Record<string, string>[];
}

export function parseArtifact(text: string, name: string): Artifact {
  const parsed = Papa.parse<string[]>(text.replace(/\r\n/g, "\n"), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new SchemaError(`${name}: not parseable as CSV (${first.message})`);
  }
  const data = parsed.data;
  if (data.length === 0) {
    throw new SchemaError(`${name}: file is empty, no header row`);
  }
  const columns = data[0]!;
  const dupes = columns.filter((c, i) => columns.indexOf(c) !== i);
  if (dupes.length > 0) {
    throw new SchemaError(`${name}: duplicate columns [${dupes.join(", ")}]`);
  }
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < data.length; i++) {
    const raw = data[i]!;
    if (raw.length !== columns.length) {
      throw new SchemaError(
        `${name}: row ${i + 1} has ${raw.length} fields, header has ${columns.length}`,
      );
    }
    const row: Record<string, string> = {};
    columns.forEach((c, k) => {
      row[c] = raw[k]!;
    });
    rows.push(row);
  }
  return { columns, rows };
}

/** Assert the artifact carries every required column. */
export function requireColumns(
  artifact: Artifact,
  name: string,
  required: string[],
): void {
  const missing = required.filter((c) => !artifact.columns.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${name}: missing required columns [${missing.join(", ")}], ` +
        `found [${artifact.columns.join(", ")}]`,
    );
  }
}

export function requireRows(artifact: Artifact, name: string): void {
  if (artifact.rows.length === 0) {
    throw new SchemaError(`${name}: no data rows below the header`);
  }
}

/** Parse a cell as a finite number, with the cell's address on failure. */
export function numberCell(
  row: Record<string, string>,
  column: string,
  name: string,
  index: number,
): number {
  const cell = row[column];
  if (cell === undefined) {
    throw new SchemaError(`${name}: row ${index + 2} lacks column ${column}`);
  }
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      `${name}: row ${index + 2}, column ${column}: not a finite number: ${JSON.stringify(cell)}`,
    );
  }
  return value;
}

/** Distinct case labels in file order. */
export function caseLabels(artifact: Artifact): string[] {
  const seen: string[] = [];
  for (const row of artifact.rows) {
    const label = row["case"];
    if (label !== undefined && !seen.includes(label)) {
      seen.push(label);
    }
  }
  return seen;
}
