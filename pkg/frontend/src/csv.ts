/**
 * Reader for the aggregate CSV written by the inference harness.
 *
 * Schema (one row per model/estimator/preset/checkpoint group):
 *   model, estimator, proposal_preset, checkpoint_particles, runs,
 *   abs_error_median, abs_error_q10, abs_error_q90,
 *   ess_median, ess_q10, ess_q90
 *
 * Values are plain (unquoted) fields; floats use shortest-round-trip
 * formatting, so the original strings are kept alongside the parsed
 * numbers and plots can carry them through bit-exactly.
 */

export const AGGREGATE_COLUMNS = [
  "model",
  "estimator",
  "proposal_preset",
  "checkpoint_particles",
  "runs",
  "abs_error_median",
  "abs_error_q10",
  "abs_error_q90",
  "ess_median",
  "ess_q10",
  "ess_q90",
] as const;

export type Metric = "abs_error" | "ess";

export interface AggregateRow {
  model: string;
  estimator: string;
  proposal_preset: string;
  checkpoint_particles: number;
  runs: number;
  abs_error_median: number;
  abs_error_q10: number;
  abs_error_q90: number;
  ess_median: number;
  ess_q10: number;
  ess_q90: number;
  /** original field strings by column, for exact round-tripping */
  raw: Record<string, string>;
}

export class CsvError extends Error {}

export function parseAggregateCsv(text: string): AggregateRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvError("empty file: no header");
  }
  const header = lines[0].split(",");
  for (const col of AGGREGATE_COLUMNS) {
    if (!header.includes(col)) {
      throw new CsvError(`missing column: ${col}`);
    }
  }
  const idx = new Map(header.map((h, i) => [h, i]));
  const rows: AggregateRow[] = [];
  for (const line of lines.slice(1)) {
    const fields = line.split(",");
    if (fields.length !== header.length) {
      throw new CsvError(
        `row has ${fields.length} fields, header has ${header.length}`,
      );
    }
    const raw: Record<string, string> = {};
    for (const col of AGGREGATE_COLUMNS) {
      raw[col] = fields[idx.get(col)!];
    }
    const num = (col: string): number => {
      const v = Number(raw[col]);
      if (!Number.isFinite(v)) {
        throw new CsvError(`non-numeric value '${raw[col]}' in column ${col}`);
      }
      return v;
    };
    rows.push({
      model: raw.model,
      estimator: raw.estimator,
      proposal_preset: raw.proposal_preset,
      checkpoint_particles: num("checkpoint_particles"),
      runs: num("runs"),
      abs_error_median: num("abs_error_median"),
      abs_error_q10: num("abs_error_q10"),
      abs_error_q90: num("abs_error_q90"),
      ess_median: num("ess_median"),
      ess_q10: num("ess_q10"),
      ess_q90: num("ess_q90"),
      raw,
    });
  }
  if (rows.length === 0) {
    throw new CsvError("no rows");
  }
  return rows;
}
