/**
 * Backend-independent scene graph: plots are built as primitive lists in
 * pixel coordinates, then written by the SVG and PNG backends, so both
 * outputs come from the same deterministic geometry.
 */

export type Color = readonly [number, number, number];

export type Primitive =
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; color: Color; width: number; dashed?: boolean }
  | { kind: "polyline"; points: ReadonlyArray<readonly [number, number]>; color: Color; width: number }
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: Color }
  | { kind: "circle"; cx: number; cy: number; r: number; fill: Color }
  | { kind: "text"; x: number; y: number; text: string; color: Color; size: number; anchor: "start" | "middle" | "end" };

export interface Scene {
  width: number;
  height: number;
  background: Color;
  items: Primitive[];
}

export const PALETTE: Color[] = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [148, 103, 189],
  [255, 127, 14],
  [23, 190, 207],
];

export const BLACK: Color = [0, 0, 0];
export const GREY: Color = [130, 130, 130];
export const WHITE: Color = [255, 255, 255];

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

/** Affine or log10 mapping from data to pixel coordinates. */
export class Scale {
  constructor(
    readonly lo: number,
    readonly hi: number,
    readonly pixLo: number,
    readonly pixHi: number,
    readonly log: boolean,
  ) {}

  private t(v: number): number {
    return this.log ? Math.log10(v) : v;
  }

  map(v: number): number {
    const a = this.t(this.lo);
    const b = this.t(this.hi);
    const f = b === a ? 0.5 : (this.t(v) - a) / (b - a);
    return this.pixLo + f * (this.pixHi - this.pixLo);
  }

  ticks(): { value: number; label: string }[] {
    if (this.log) {
      const lo = Math.floor(Math.log10(this.lo));
      const hi = Math.ceil(Math.log10(this.hi));
      const out = [];
      for (let e = lo; e <= hi; e++) {
        const v = Math.pow(10, e);
        if (v >= this.lo / 1.0001 && v <= this.hi * 1.0001) {
          out.push({ value: v, label: `1e${e}` });
        }
      }
      return out;
    }
    const span = this.hi - this.lo;
    if (span <= 0) return [{ value: this.lo, label: fmt(this.lo) }];
    const raw = span / 5;
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= 6) ?? 10 * mag;
    const out = [];
    for (let v = Math.ceil(this.lo / step) * step; v <= this.hi + 1e-12 * span; v += step) {
      out.push({ value: v, label: fmt(v) });
    }
    return out;
  }
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.001 && a < 10000) {
    return String(Number(v.toFixed(4)));
  }
  return v.toExponential(2).replace("e-", "e-").replace("e+", "e");
}

export function expandRange(lo: number, hi: number, log: boolean): [number, number] {
  if (log) return [lo / 1.5, hi * 1.5];
  if (lo === hi) return [lo - 1, hi + 1];
  const pad = 0.07 * (hi - lo);
  return [lo - pad, hi + pad];
}

export interface Frame {
  scene: Scene;
  xs: Scale;
  ys: Scale;
  margins: Margins;
}

/** Axes box with ticks, labels and optional title/footer. */
export function makeFrame(opts: {
  width?: number;
  height?: number;
  xRange: [number, number];
  yRange: [number, number];
  logY?: boolean;
  title: string;
  xLabel: string;
  yLabel: string;
  footer?: string;
}): Frame {
  const width = opts.width ?? 640;
  const height = opts.height ?? 420;
  const margins: Margins = { left: 78, right: 24, top: 34, bottom: 58 };
  const scene: Scene = { width, height, background: WHITE, items: [] };
  const xs = new Scale(opts.xRange[0], opts.xRange[1], margins.left, width - margins.right, false);
  const ys = new Scale(opts.yRange[0], opts.yRange[1], height - margins.bottom, margins.top, Boolean(opts.logY));
  const x0 = margins.left;
  const x1 = width - margins.right;
  const y0 = height - margins.bottom;
  const y1 = margins.top;
  // gridlines + ticks
  for (const t of xs.ticks()) {
    const px = xs.map(t.value);
    scene.items.push({ kind: "line", x1: px, y1: y0, x2: px, y2: y1, color: [225, 225, 225], width: 1 });
    scene.items.push({ kind: "line", x1: px, y1: y0, x2: px, y2: y0 + 5, color: BLACK, width: 1 });
    scene.items.push({ kind: "text", x: px, y: y0 + 18, text: t.label, color: BLACK, size: 11, anchor: "middle" });
  }
  for (const t of ys.ticks()) {
    const py = ys.map(t.value);
    scene.items.push({ kind: "line", x1: x0, y1: py, x2: x1, y2: py, color: [225, 225, 225], width: 1 });
    scene.items.push({ kind: "line", x1: x0 - 5, y1: py, x2: x0, y2: py, color: BLACK, width: 1 });
    scene.items.push({ kind: "text", x: x0 - 8, y: py + 4, text: t.label, color: BLACK, size: 11, anchor: "end" });
  }
  // frame
  scene.items.push({ kind: "line", x1: x0, y1: y0, x2: x1, y2: y0, color: BLACK, width: 1 });
  scene.items.push({ kind: "line", x1: x0, y1: y0, x2: x0, y2: y1, color: BLACK, width: 1 });
  scene.items.push({ kind: "line", x1: x1, y1: y0, x2: x1, y2: y1, color: BLACK, width: 1 });
  scene.items.push({ kind: "line", x1: x0, y1: y1, x2: x1, y2: y1, color: BLACK, width: 1 });
  // labels
  scene.items.push({ kind: "text", x: (x0 + x1) / 2, y: 20, text: opts.title, color: BLACK, size: 13, anchor: "middle" });
  scene.items.push({ kind: "text", x: (x0 + x1) / 2, y: height - 26, text: opts.xLabel, color: BLACK, size: 12, anchor: "middle" });
  scene.items.push({ kind: "text", x: x0, y: y1 - 8, text: opts.yLabel, color: BLACK, size: 12, anchor: "start" });
  if (opts.footer) {
    scene.items.push({ kind: "text", x: width - margins.right, y: height - 8, text: opts.footer, color: GREY, size: 10, anchor: "end" });
  }
  return { scene, xs, ys, margins };
}
