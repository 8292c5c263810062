/**
 * Text table of observed per-algorithm resource extremes next to the
 * published bounds. Observed values come from the simulator's summary
 * (pre-consensus filtered); when no summary is available the fallback
 * scans the CSV omega column, which also contains post-consensus rows
 * and is labelled accordingly.
 */

import { RunSeries, Summary } from "./schema.js";

function fmtCell(v: number | null | undefined): string {
  return v === null || v === undefined ? "-" : String(v);
}

export function costTable(series: RunSeries[], summary: Summary | null): string {
  const algs = [...new Set(series.map((s) => s.alg))].sort();
  const lines: string[] = [];
  const header = ["algorithm", "observed min w", "observed max w", "bound min w", "bound max w"];
  const rows: string[][] = [header];

  for (const alg of algs) {
    let obsMin: number | null = null;
    let obsMax: number | null = null;
    if (summary) {
      for (const run of summary.runs) {
        if (run.alg !== alg) continue;
        if (run.omega_min !== null && (obsMin === null || run.omega_min < obsMin)) obsMin = run.omega_min;
        if (run.omega_max !== null && (obsMax === null || run.omega_max > obsMax)) obsMax = run.omega_max;
      }
    } else {
      for (const s of series) {
        if (s.alg !== alg) continue;
        for (const row of s.rows) {
          if (row.signals === 0) continue; // initial sample carries no event cost
          if (obsMin === null || row.omega < obsMin) obsMin = row.omega;
          if (obsMax === null || row.omega > obsMax) obsMax = row.omega;
        }
      }
    }
    const bounds = summary?.table_bounds[alg];
    rows.push([
      alg,
      fmtCell(obsMin),
      fmtCell(obsMax),
      fmtCell(bounds?.omega_min),
      fmtCell(bounds?.omega_max),
    ]);
  }

  const widths = header.map((_, col) => Math.max(...rows.map((r) => r[col].length)));
  for (const row of rows) {
    lines.push(row.map((cell, col) => cell.padEnd(widths[col])).join("  ").trimEnd());
  }
  if (!summary) {
    lines.push("");
    lines.push("note: no summary.json found; observed values include post-consensus rows");
  }
  return lines.join("\n") + "\n";
}
