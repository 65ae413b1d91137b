/** Reader for the engine's CSV dialect: header row, comma-separated, no
 * quoting (the writer never emits quotes, commas, or newlines inside a
 * field), LF line endings, trailing newline. Anything else is corruption
 * and is rejected rather than guessed at. */

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, source: string): Table {
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new Error(`${source}: empty file`);
  }
  const header = (lines[0] as string).split(",");
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i] as string;
    if (line.includes('"')) {
      throw new Error(`${source}:${i + 1}: quoted fields are not part of the dialect`);
    }
    const row = line.split(",");
    if (row.length !== header.length) {
      throw new Error(
        `${source}:${i + 1}: expected ${header.length} fields, got ${row.length}`
      );
    }
    rows.push(row);
  }
  return { header, rows };
}

export function columnIndex(table: Table, name: string, source: string): number {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new Error(`${source}: missing column '${name}' (header: ${table.header.join(",")})`);
  }
  return index;
}

/** Objects keyed by header name; blank fields stay as "". */
export function asRecords(table: Table): Record<string, string>[] {
  return table.rows.map((row) => {
    const record: Record<string, string> = {};
    table.header.forEach((name, i) => {
      record[name] = row[i] as string;
    });
    return record;
  });
}

export function toNumber(value: string, context: string): number {
  const parsed = Number(value);
  if (value === "" || Number.isNaN(parsed)) {
    throw new Error(`${context}: not a number: '${value}'`);
  }
  return parsed;
}
