/**
 * Plot builders: experiment CSV tables -> scenes.  Styling is pinned (fixed
 * palette, sizes, margins), so rendered bytes are stable for golden tests.
 */

import { readCsv, requireColumns, Table } from "./csv.js";
import { BLACK, Color, fmt, GREY, makeFrame, PALETTE, Scene, expandRange } from "./scene.js";

export type PlotKind = "decay" | "ratewindow" | "security";

export interface PlotSpec {
  kind: PlotKind;
  csv: string;
  out: string; // directory or path without extension
  title?: string;
  xlabel?: string;
  ylabel?: string;
  ycolumn?: string;
  logy?: boolean;
}

export interface BuildResult {
  scene: Scene;
  droppedNonpositive: number;
  warnings: string[];
}

function footerFor(table: Table): string {
  const hash = table.meta["config_hash"] ?? "unknown";
  return `config ${hash}`;
}

function groupBy(table: Table, column: string): Map<string, Record<string, string>[]> {
  const out = new Map<string, Record<string, string>[]>();
  for (const row of table.rows) {
    const key = row[column];
    if (!out.has(key)) out.set(key, []);
    out.get(key)!.push(row);
  }
  return out;
}

/** Semi-log decay curves (error-vs-n or TV-vs-n), one series per rate. */
export function buildDecay(spec: PlotSpec): BuildResult {
  const table = readCsv(spec.csv);
  const ycol = spec.ycolumn ?? (table.columns.includes("err") ? "err" : "tv");
  requireColumns(table, ["n", "R", ycol]);
  const logy = spec.logy ?? true;
  const warnings: string[] = [];
  let dropped = 0;

  const series: { label: string; pts: [number, number][]; color: Color }[] = [];
  const rates = [...groupBy(table, "R").entries()];
  rates.forEach(([rate, rows], idx) => {
    const byN = new Map<number, number[]>();
    for (const row of rows) {
      const n = Number(row["n"]);
      const y = Number(row[ycol]);
      if (logy && !(y > 0)) {
        dropped++;
        continue;
      }
      if (!byN.has(n)) byN.set(n, []);
      byN.get(n)!.push(y);
    }
    const pts = [...byN.entries()]
      .map(([n, ys]) => [n, ys.reduce((a, b) => a + b, 0) / ys.length] as [number, number])
      .sort((a, b) => a[0] - b[0]);
    if (pts.length > 0) {
      series.push({ label: `R=${fmt(Number(rate))}`, pts, color: PALETTE[idx % PALETTE.length] });
    }
  });
  if (dropped > 0) {
    warnings.push(`dropped ${dropped} nonpositive value(s) from the log axis`);
  }
  if (series.length === 0) {
    warnings.push("all values dropped; rendering empty axes");
  }
  const allPts = series.flatMap((s) => s.pts);
  const xVals = allPts.map((p) => p[0]);
  const yVals = allPts.map((p) => p[1]);
  const xRange = expandRange(Math.min(...(xVals.length ? xVals : [0])), Math.max(...(xVals.length ? xVals : [1])), false);
  const yRange = expandRange(Math.min(...(yVals.length ? yVals : [0.1])), Math.max(...(yVals.length ? yVals : [1])), logy);
  const frame = makeFrame({
    xRange,
    yRange,
    logY: logy,
    title: spec.title ?? `${ycol} vs n`,
    xLabel: spec.xlabel ?? "block length n",
    yLabel: spec.ylabel ?? `${ycol}${logy ? " (log scale)" : ""}`,
    footer: footerFor(table),
  });
  series.forEach((s, idx) => {
    const pix = s.pts.map(([x, y]) => [frame.xs.map(x), frame.ys.map(y)] as const);
    frame.scene.items.push({ kind: "polyline", points: pix, color: s.color, width: 2 });
    for (const [px, py] of pix) {
      frame.scene.items.push({ kind: "circle", cx: px, cy: py, r: 3.5, fill: s.color });
    }
    const lx = frame.scene.width - frame.margins.right - 150;
    const ly = frame.margins.top + 16 + 16 * idx;
    frame.scene.items.push({ kind: "line", x1: lx, y1: ly - 4, x2: lx + 22, y2: ly - 4, color: s.color, width: 2 });
    frame.scene.items.push({ kind: "text", x: lx + 28, y: ly, text: s.label, color: BLACK, size: 11, anchor: "start" });
  });
  return { scene: frame.scene, droppedNonpositive: dropped, warnings };
}

/** Per-message-tuple mutual information bars for both receivers. */
export function buildRateWindow(spec: PlotSpec): BuildResult {
  const table = readCsv(spec.csv);
  requireColumns(table, ["side", "a", "mi", "stderr"]);
  const sides = groupBy(table, "side");
  const tuples = [...new Set(table.rows.map((r) => r["a"]))];
  const xRange: [number, number] = [-0.6, tuples.length - 0.4];
  const mis = table.rows.map((r) => Number(r["mi"]));
  const rate = table.meta["rate"] !== undefined ? Number(table.meta["rate"]) : undefined;
  const hi = Math.max(...mis, rate ?? 0);
  const frame = makeFrame({
    xRange,
    yRange: [0, hi * 1.15 || 1],
    title: spec.title ?? "rate window per message tuple",
    xLabel: spec.xlabel ?? "message tuple index",
    yLabel: spec.ylabel ?? "mutual information (nats)",
    footer: footerFor(table),
  });
  const colors: Record<string, Color> = { bob: PALETTE[0], eve: PALETTE[1] };
  const sideNames = [...sides.keys()].sort();
  const y0 = frame.ys.map(0);
  sideNames.forEach((side, si) => {
    const rows = sides.get(side)!;
    const color = colors[side] ?? PALETTE[(2 + si) % PALETTE.length];
    rows.forEach((row) => {
      const ti = tuples.indexOf(row["a"]);
      const w = 0.34;
      const xc = ti + (si - (sideNames.length - 1) / 2) * w;
      const xPix = frame.xs.map(xc - w / 2);
      const xPix2 = frame.xs.map(xc + w / 2);
      const yPix = frame.ys.map(Number(row["mi"]));
      frame.scene.items.push({ kind: "rect", x: xPix, y: yPix, w: xPix2 - xPix, h: y0 - yPix, fill: color });
      const se = Number(row["stderr"]);
      if (se > 0) {
        const cx = frame.xs.map(xc);
        frame.scene.items.push({
          kind: "line",
          x1: cx, y1: frame.ys.map(Number(row["mi"]) - 3 * se),
          x2: cx, y2: frame.ys.map(Number(row["mi"]) + 3 * se),
          color: BLACK, width: 1,
        });
      }
    });
    const lx = frame.scene.width - frame.margins.right - 130;
    const ly = frame.margins.top + 16 + 16 * si;
    frame.scene.items.push({ kind: "rect", x: lx, y: ly - 9, w: 18, h: 9, fill: color });
    frame.scene.items.push({ kind: "text", x: lx + 24, y: ly, text: side, color: BLACK, size: 11, anchor: "start" });
  });
  if (rate !== undefined) {
    frame.scene.items.push({
      kind: "line",
      x1: frame.xs.map(xRange[0]), y1: frame.ys.map(rate),
      x2: frame.xs.map(xRange[1]), y2: frame.ys.map(rate),
      color: BLACK, width: 1, dashed: true,
    });
    frame.scene.items.push({
      kind: "text", x: frame.xs.map(xRange[0]) + 6, y: frame.ys.map(rate) - 5,
      text: `R=${fmt(rate)}`, color: BLACK, size: 11, anchor: "start",
    });
  }
  return { scene: frame.scene, droppedNonpositive: 0, warnings: [] };
}

/** Eavesdropper statistic vs its lower bound; points on or above the
 * diagonal satisfy the guarantee. */
export function buildSecurity(spec: PlotSpec): BuildResult {
  const table = readCsv(spec.csv);
  requireColumns(table, ["eps_or_lossname", "mu_stat", "bound", "satisfied"]);
  const xs = table.rows.map((r) => Number(r["bound"]));
  const ys = table.rows.map((r) => Number(r["mu_stat"]));
  const lo = Math.min(...xs, ...ys, 0);
  const hi = Math.max(...xs, ...ys, 0.01);
  const range = expandRange(lo, hi, false);
  const frame = makeFrame({
    xRange: range,
    yRange: range,
    title: spec.title ?? "eavesdropper statistic vs bound",
    xLabel: spec.xlabel ?? "white-noise statistic minus TV allowance",
    yLabel: spec.ylabel ?? "codebook-jamming statistic",
    footer: footerFor(table),
  });
  frame.scene.items.push({
    kind: "line",
    x1: frame.xs.map(range[0]), y1: frame.ys.map(range[0]),
    x2: frame.xs.map(range[1]), y2: frame.ys.map(range[1]),
    color: GREY, width: 1, dashed: true,
  });
  table.rows.forEach((row, idx) => {
    const ok = row["satisfied"] === "1" || row["satisfied"].toLowerCase() === "true";
    const color = ok ? PALETTE[2] : PALETTE[1];
    const px = frame.xs.map(Number(row["bound"]));
    const py = frame.ys.map(Number(row["mu_stat"]));
    frame.scene.items.push({ kind: "circle", cx: px, cy: py, r: 4, fill: color });
    frame.scene.items.push({
      kind: "text", x: px + 7, y: py - 6, text: row["eps_or_lossname"],
      color: GREY, size: 10, anchor: "start",
    });
    void idx;
  });
  return { scene: frame.scene, droppedNonpositive: 0, warnings: [] };
}

export function buildScene(spec: PlotSpec): BuildResult {
  switch (spec.kind) {
    case "decay":
      return buildDecay(spec);
    case "ratewindow":
      return buildRateWindow(spec);
    case "security":
      return buildSecurity(spec);
    default:
      throw new Error(`unknown plot kind '${(spec as PlotSpec).kind}'`);
  }
}
