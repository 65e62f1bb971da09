/**
 * Hand-rolled SVG renderer: one convergence panel per call.
 *
 * X axis: particle checkpoints on a log10 scale.  Per estimator series:
 * a shaded 10-90% band and a median line.  The exact CSV value strings
 * are carried into `data-*` attributes on each series element, so the
 * numbers behind a figure can be recovered from the figure itself.
 *
 * Rendering is a pure function of the rows: same input, same bytes.
 */

import { AggregateRow, Metric } from "./csv.js";

const WIDTH = 720;
const HEIGHT = 440;
const MARGIN = { top: 40, right: 24, bottom: 56, left: 76 };

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

interface Series {
  estimator: string;
  points: AggregateRow[]; // sorted by checkpoint
}

function groupSeries(rows: AggregateRow[]): Series[] {
  const byEst = new Map<string, AggregateRow[]>();
  for (const r of rows) {
    const list = byEst.get(r.estimator) ?? [];
    list.push(r);
    byEst.set(r.estimator, list);
  }
  return [...byEst.keys()].sort().map((estimator) => ({
    estimator,
    points: byEst
      .get(estimator)!
      .slice()
      .sort((a, b) => a.checkpoint_particles - b.checkpoint_particles),
  }));
}

function fmt(v: number): string {
  return v.toFixed(2);
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) {
    ticks.push(v);
  }
  return ticks;
}

export function renderPanel(
  rows: AggregateRow[],
  metric: Metric,
  title: string,
): string {
  const series = groupSeries(rows);
  const med = `${metric}_median` as keyof AggregateRow;
  const q10 = `${metric}_q10` as keyof AggregateRow;
  const q90 = `${metric}_q90` as keyof AggregateRow;

  const xs = rows.map((r) => Math.log10(r.checkpoint_particles));
  const ys = rows.flatMap((r) => [r[med] as number, r[q10] as number, r[q90] as number]);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  let yLo = Math.min(...ys, 0);
  let yHi = Math.max(...ys);
  if (yHi === yLo) yHi = yLo + 1;
  const pad = 0.05 * (yHi - yLo);
  yHi += pad;

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number): number =>
    MARGIN.left + (xHi === xLo ? plotW / 2 : ((x - xLo) / (xHi - xLo)) * plotW);
  const sy = (y: number): number =>
    MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${title}</text>`,
  );

  // axes
  const axY = MARGIN.top + plotH;
  parts.push(
    `<line x1="${MARGIN.left}" y1="${axY}" x2="${MARGIN.left + plotW}" y2="${axY}" stroke="black"/>`,
  );
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axY}" stroke="black"/>`,
  );
  const checkpoints = [...new Set(rows.map((r) => r.checkpoint_particles))].sort(
    (a, b) => a - b,
  );
  for (const c of checkpoints) {
    const x = sx(Math.log10(c));
    parts.push(`<line x1="${fmt(x)}" y1="${axY}" x2="${fmt(x)}" y2="${axY + 5}" stroke="black"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${axY + 20}" text-anchor="middle">${c}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle">particles (log scale)</text>`,
  );
  for (const t of niceTicks(yLo, yHi)) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(y)}" x2="${MARGIN.left}" y2="${fmt(y)}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 9}" y="${fmt(y + 4)}" text-anchor="end">${+t.toPrecision(4)}</text>`,
    );
  }
  parts.push(
    `<text transform="rotate(-90 18 ${MARGIN.top + plotH / 2})" x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle">${metric}</text>`,
  );

  // series: band then median, so lines stay on top
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = s.points;
    const xsS = pts.map((p) => sx(Math.log10(p.checkpoint_particles)));
    const lower = pts.map((p, j) => `${fmt(xsS[j])},${fmt(sy(p[q10] as number))}`);
    const upper = pts.map((p, j) => `${fmt(xsS[j])},${fmt(sy(p[q90] as number))}`);
    const band = [...upper, ...lower.slice().reverse()].join(" ");
    const rawQ10 = pts.map((p) => p.raw[q10 as string]).join(" ");
    const rawQ90 = pts.map((p) => p.raw[q90 as string]).join(" ");
    const rawMed = pts.map((p) => p.raw[med as string]).join(" ");
    const rawCps = pts.map((p) => p.raw.checkpoint_particles).join(" ");
    parts.push(
      `<polygon class="band" data-estimator="${s.estimator}" ` +
        `data-checkpoints="${rawCps}" data-q10="${rawQ10}" data-q90="${rawQ90}" ` +
        `points="${band}" fill="${color}" fill-opacity="0.18" stroke="none"/>`,
    );
    const line = pts
      .map((p, j) => `${fmt(xsS[j])},${fmt(sy(p[med] as number))}`)
      .join(" ");
    parts.push(
      `<polyline class="median" data-estimator="${s.estimator}" ` +
        `data-checkpoints="${rawCps}" data-median="${rawMed}" ` +
        `points="${line}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
  });

  // legend
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const y = MARGIN.top + 8 + 18 * i;
    const x = MARGIN.left + plotW - 150;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 26}" y2="${y}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(`<text x="${x + 32}" y="${y + 4}">${s.estimator}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n");
}

/** Split rows into panels by a column value ("" key = single panel). */
export function panelGroups(
  rows: AggregateRow[],
  panelBy?: string,
): Map<string, AggregateRow[]> {
  if (!panelBy) return new Map([["", rows]]);
  const groups = new Map<string, AggregateRow[]>();
  for (const r of rows) {
    const key = r.raw[panelBy];
    if (key === undefined) {
      throw new Error(`missing column: ${panelBy}`);
    }
    const list = groups.get(key) ?? [];
    list.push(r);
    groups.set(key, list);
  }
  return new Map([...groups.entries()].sort((a, b) => a[0].localeCompare(b[0])));
}
