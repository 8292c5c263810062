/**
 * Multi-panel convergence figure, one panel per back-signal
 * probability, one line per algorithm, rendered as a standalone SVG
 * string. Pure function of the parsed series; nothing is recomputed
 * from simulation state.
 */

import { RunSeries, SchemaError } from "./schema.js";

export interface FigureOptions {
  log: boolean;
  width?: number;
  height?: number;
}

const COLORS: Record<string, string> = {
  bm: "#1f77b4",
  da: "#d62728",
  oh: "#2ca02c",
  dda: "#9467bd",
  gossip: "#ff7f0e",
  aris: "#8c564b",
};

const PANEL_W = 420;
const PANEL_H = 300;
const MARGIN = { top: 34, right: 16, bottom: 44, left: 64 };

function color(alg: string): string {
  return COLORS[alg] ?? "#444444";
}

/** Panels ordered by descending p: 1, 1/2, 1/4, 0 reads left to right. */
export function panelKeys(series: RunSeries[]): string[] {
  const keys = [...new Set(series.map((s) => s.p))];
  keys.sort((a, b) => Number(b) - Number(a));
  return keys;
}

/** One line per algorithm per panel: the lowest seed wins. */
export function selectPanelSeries(series: RunSeries[], p: string): RunSeries[] {
  const byAlg = new Map<string, RunSeries>();
  for (const s of series) {
    if (s.p !== p) continue;
    const cur = byAlg.get(s.alg);
    if (!cur || Number(s.seed) < Number(cur.seed)) {
      byAlg.set(s.alg, s);
    }
  }
  return [...byAlg.values()].sort((a, b) => a.alg.localeCompare(b.alg));
}

interface Scale {
  (value: number): number;
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  return (v) => outLo + ((v - lo) / span) * (outHi - outLo);
}

function niceTicks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((c) => span / c <= count) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-9; v += chosen) {
    ticks.push(v);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 10000 || abs < 0.01) return v.toExponential(0).replace("+", "");
  return String(Math.round(v * 100) / 100);
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function renderPanel(
  series: RunSeries[],
  p: string,
  log: boolean,
  x0: number,
  y0: number,
): string {
  const innerW = PANEL_W - MARGIN.left - MARGIN.right;
  const innerH = PANEL_H - MARGIN.top - MARGIN.bottom;
  const xs = series.flatMap((s) => s.rows.map((r) => r.signals));
  const xMax = Math.max(...xs, 1);
  const positives = series.flatMap((s) =>
    s.rows.map((r) => r.networkError).filter((v) => v > 0),
  );
  const floor = positives.length ? Math.min(...positives) : 1e-12;
  const yRaw = series.flatMap((s) => s.rows.map((r) => r.networkError));
  const yMaxRaw = Math.max(...yRaw, floor);

  const toY = (v: number) => (log ? Math.log10(Math.max(v, floor)) : v);
  const yLo = log ? Math.log10(floor) : 0;
  const yHi = log ? Math.log10(yMaxRaw) : yMaxRaw;
  const sx = linearScale(0, xMax, x0 + MARGIN.left, x0 + MARGIN.left + innerW);
  const sy = linearScale(yLo, yHi === yLo ? yLo + 1 : yHi, y0 + MARGIN.top + innerH, y0 + MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<rect x="${x0 + MARGIN.left}" y="${y0 + MARGIN.top}" width="${innerW}" height="${innerH}" ` +
      `fill="none" stroke="#999" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${x0 + PANEL_W / 2}" y="${y0 + 20}" text-anchor="middle" ` +
      `font-size="14" font-weight="bold">p = ${esc(p)}</text>`,
  );

  // y ticks: decades when log, nice steps otherwise
  const yTicks = log
    ? Array.from({ length: Math.floor(yHi) - Math.ceil(yLo) + 1 }, (_, i) => Math.ceil(yLo) + i)
    : niceTicks(yLo, yHi, 5);
  for (const t of yTicks) {
    const y = sy(t);
    parts.push(`<line x1="${x0 + MARGIN.left - 4}" y1="${y}" x2="${x0 + MARGIN.left}" y2="${y}" stroke="#333"/>`);
    const label = log ? `1e${t}` : fmt(t);
    parts.push(
      `<text x="${x0 + MARGIN.left - 7}" y="${y + 4}" text-anchor="end" font-size="10">${label}</text>`,
    );
  }
  for (const t of niceTicks(0, xMax, 5)) {
    const x = sx(t);
    const yb = y0 + MARGIN.top + innerH;
    parts.push(`<line x1="${x}" y1="${yb}" x2="${x}" y2="${yb + 4}" stroke="#333"/>`);
    parts.push(`<text x="${x}" y="${yb + 16}" text-anchor="middle" font-size="10">${fmt(t)}</text>`);
  }
  parts.push(
    `<text x="${x0 + MARGIN.left + innerW / 2}" y="${y0 + PANEL_H - 8}" text-anchor="middle" ` +
      `font-size="11">signals</text>`,
  );
  parts.push(
    `<text x="${x0 + 14}" y="${y0 + MARGIN.top + innerH / 2}" text-anchor="middle" font-size="11" ` +
      `transform="rotate(-90 ${x0 + 14} ${y0 + MARGIN.top + innerH / 2})">network error</text>`,
  );

  for (const s of series) {
    const points = s.rows
      .map((r) => `${sx(r.signals).toFixed(2)},${sy(toY(r.networkError)).toFixed(2)}`)
      .join(" ");
    parts.push(
      `<polyline points="${points}" fill="none" stroke="${color(s.alg)}" stroke-width="1.6" ` +
        `data-alg="${s.alg}"/>`,
    );
  }
  return parts.join("\n");
}

export function renderFigure(series: RunSeries[], opts: FigureOptions): string {
  if (series.length === 0) {
    throw new SchemaError("no run series to plot");
  }
  const keys = panelKeys(series);
  const cols = keys.length > 1 ? 2 : 1;
  const rowsCount = Math.ceil(keys.length / cols);
  const legendH = 28;
  const width = opts.width ?? cols * PANEL_W;
  const height = (opts.height ?? rowsCount * PANEL_H) + legendH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  const algs = [...new Set(series.map((s) => s.alg))].sort();
  let lx = 16;
  for (const alg of algs) {
    parts.push(`<line x1="${lx}" y1="14" x2="${lx + 22}" y2="14" stroke="${color(alg)}" stroke-width="2.5"/>`);
    parts.push(`<text x="${lx + 26}" y="18" font-size="12">${esc(alg)}</text>`);
    lx += 26 + 10 * alg.length + 24;
  }

  keys.forEach((p, idx) => {
    const x0 = (idx % cols) * PANEL_W;
    const y0 = legendH + Math.floor(idx / cols) * PANEL_H;
    parts.push(renderPanel(selectPanelSeries(series, p), p, opts.log, x0, y0));
  });
  parts.push("</svg>");
  return parts.join("\n");
}
