/**
 * Parsing and validation of the simulator's run CSVs.
 *
 * The schema is fixed: header `time,network_error,max_node_error,signals,omega`,
 * one sampled reception per row, file names `{alg}_p{p}_s{seed}.csv`.
 * Anything off-schema raises a SchemaError naming the offending column
 * (or file), which the CLI turns into a non-zero exit.
 */

export const CSV_COLUMNS = [
  "time",
  "network_error",
  "max_node_error",
  "signals",
  "omega",
] as const;

export class SchemaError extends Error {
  constructor(message: string, public readonly column?: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Row {
  time: number;
  networkError: number;
  maxNodeError: number;
  signals: number;
  omega: number;
}

export interface RunSeries {
  file: string;
  alg: string;
  p: string;
  seed: string;
  rows: Row[];
}

const RUN_NAME = /^([a-z]+)_p([^_]+)_s([^.]+)\.csv$/;

export function parseRunName(file: string): { alg: string; p: string; seed: string } {
  const m = RUN_NAME.exec(file);
  if (!m) {
    throw new SchemaError(`${file}: not a run file (expected {alg}_p{p}_s{seed}.csv)`);
  }
  return { alg: m[1], p: m[2], seed: m[3] };
}

export function parseRunCsv(file: string, text: string): RunSeries {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${file}: empty CSV`);
  }
  const header = lines[0].split(",");
  for (let i = 0; i < CSV_COLUMNS.length; i++) {
    if (header[i] !== CSV_COLUMNS[i]) {
      throw new SchemaError(
        `${file}: header column ${i + 1} is ${JSON.stringify(header[i] ?? "")}, ` +
          `expected "${CSV_COLUMNS[i]}"`,
        CSV_COLUMNS[i],
      );
    }
  }
  if (header.length !== CSV_COLUMNS.length) {
    throw new SchemaError(`${file}: ${header.length} header columns, expected ${CSV_COLUMNS.length}`);
  }
  if (lines.length === 1) {
    throw new SchemaError(`${file}: no data rows`);
  }
  const rows: Row[] = [];
  for (let lineNo = 1; lineNo < lines.length; lineNo++) {
    const fields = lines[lineNo].split(",");
    if (fields.length !== CSV_COLUMNS.length) {
      throw new SchemaError(`${file}:${lineNo + 1}: ${fields.length} fields`);
    }
    const values = fields.map((field, col) => {
      const value = Number(field);
      if (!Number.isFinite(value)) {
        throw new SchemaError(
          `${file}:${lineNo + 1}: column "${CSV_COLUMNS[col]}" is not numeric (${field})`,
          CSV_COLUMNS[col],
        );
      }
      return value;
    });
    rows.push({
      time: values[0],
      networkError: values[1],
      maxNodeError: values[2],
      signals: values[3],
      omega: values[4],
    });
  }
  return { file, ...parseRunName(file), rows };
}

/** Relevant slices of the simulator's summary.json, when present. */
export interface Summary {
  runs: Array<{
    alg: string;
    p: number;
    seed: number;
    omega_min: number | null;
    omega_max: number | null;
  }>;
  table_bounds: Record<string, { omega_min: number; omega_max: number }>;
}

export function parseSummary(text: string): Summary {
  const raw = JSON.parse(text) as Summary;
  if (!Array.isArray(raw.runs) || typeof raw.table_bounds !== "object") {
    throw new SchemaError("summary.json: missing runs/table_bounds");
  }
  return raw;
}
