#!/usr/bin/env node
/**
 * consensim-plots render CLI.
 *
 *   render --in DIR --out FIG.svg [--log]
 *
 * Reads every `{alg}_p{p}_s{seed}.csv` in DIR (plus summary.json when
 * present), writes the multi-panel figure to FIG.svg and the cost table
 * to FIG.costs.txt. Schema problems exit non-zero with the offending
 * column or file named.
 */

import { readFileSync, readdirSync, writeFileSync, existsSync } from "fs";
import { join, basename } from "path";

import { parseRunCsv, parseSummary, RunSeries, SchemaError, Summary } from "./schema.js";
import { renderFigure } from "./figure.js";
import { costTable } from "./table.js";

export interface RenderResult {
  figurePath: string;
  tablePath: string;
  panels: number;
  series: number;
}

export function renderDirectory(inDir: string, outPath: string, log: boolean): RenderResult {
  const files = readdirSync(inDir).filter((f) => f.endsWith(".csv")).sort();
  if (files.length === 0) {
    throw new SchemaError(`${inDir}: no run CSVs found`);
  }
  const series: RunSeries[] = files.map((f) =>
    parseRunCsv(basename(f), readFileSync(join(inDir, f), "utf8")),
  );
  let summary: Summary | null = null;
  const summaryPath = join(inDir, "summary.json");
  if (existsSync(summaryPath)) {
    summary = parseSummary(readFileSync(summaryPath, "utf8"));
  }
  const svg = renderFigure(series, { log });
  writeFileSync(outPath, svg);
  const tablePath = outPath.replace(/\.svg$/, "") + ".costs.txt";
  writeFileSync(tablePath, costTable(series, summary));
  return {
    figurePath: outPath,
    tablePath,
    panels: new Set(series.map((s) => s.p)).size,
    series: series.length,
  };
}

function usage(): never {
  console.error("usage: consensim-plots render --in DIR --out FIG.svg [--log]");
  process.exit(2);
}

export function main(argv: string[]): number {
  const args = [...argv];
  if (args[0] === "render") args.shift();
  let inDir: string | null = null;
  let outPath: string | null = null;
  let log = false;
  while (args.length > 0) {
    const flag = args.shift();
    if (flag === "--in") inDir = args.shift() ?? null;
    else if (flag === "--out") outPath = args.shift() ?? null;
    else if (flag === "--log") log = true;
    else usage();
  }
  if (!inDir || !outPath) usage();
  try {
    const result = renderDirectory(inDir, outPath, log);
    console.log(
      `wrote ${result.figurePath} (${result.panels} panels, ${result.series} series) ` +
        `and ${result.tablePath}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && basename(process.argv[1]).startsWith("cli")) {
  process.exit(main(process.argv.slice(2)));
}
