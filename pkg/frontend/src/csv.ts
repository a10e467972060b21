/**
 * Reader for the experiment CSV contract: comma-separated, `.` decimals,
 * `#`-prefixed metadata lines (config hash + resolved config), LF endings.
 */

export interface CsvTable {
  columns: string[];
  rows: Record<string, string>[];
  metadata: Record<string, string>;
}

export class CsvFormatError extends Error {}

export class MissingColumnsError extends Error {
  constructor(
    public readonly missing: string[],
    public readonly present: string[],
  ) {
    super(
      `missing required column(s) ${missing.join(', ')}; ` +
        `file has: ${present.join(', ')}`,
    );
  }
}

export function parseCsv(text: string): CsvTable {
  const metadata: Record<string, string> = {};
  const lines = text.split('\n').filter((line) => line.length > 0);
  let i = 0;
  for (; i < lines.length && lines[i].startsWith('#'); i++) {
    const body = lines[i].slice(1).trim();
    const eq = body.indexOf('=');
    if (eq > 0) {
      metadata[body.slice(0, eq)] = body.slice(eq + 1);
    }
  }
  if (i >= lines.length) {
    throw new CsvFormatError('no header line found');
  }
  const columns = lines[i].split(',');
  if (columns.some((c) => c.length === 0)) {
    throw new CsvFormatError(`malformed header line: ${lines[i]}`);
  }
  const rows: Record<string, string>[] = [];
  for (const line of lines.slice(i + 1)) {
    const cells = line.split(',');
    if (cells.length !== columns.length) {
      throw new CsvFormatError(
        `row has ${cells.length} cells, header has ${columns.length}: ${line}`,
      );
    }
    rows.push(Object.fromEntries(columns.map((c, j) => [c, cells[j]])));
  }
  return { columns, rows, metadata };
}

/** Numeric column accessor; any non-finite cell is a format error. */
export function numericColumn(table: CsvTable, name: string): number[] {
  requireColumns(table, [name]);
  return table.rows.map((row) => {
    const v = Number(row[name]);
    if (!Number.isFinite(v)) {
      throw new CsvFormatError(`non-numeric cell ${row[name]!} in column ${name}`);
    }
    return v;
  });
}

export function requireColumns(table: CsvTable, needed: string[]): void {
  const missing = needed.filter((c) => !table.columns.includes(c));
  if (missing.length > 0) {
    throw new MissingColumnsError(missing, table.columns);
  }
}
