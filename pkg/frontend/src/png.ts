/**
 * Scene -> PNG bytes with no native dependencies: primitives rasterize onto
 * an RGB buffer (Bresenham lines, filled shapes, the 5x7 bitmap font) and
 * the encoder emits one zlib-deflated IDAT with filter 0 on every row, so
 * output bytes are a pure function of the scene.
 */

import { deflateSync } from "zlib";

import { GLYPH_H, GLYPH_SPACING, GLYPH_W, glyphRows, textWidth } from "./font.js";
import { Color, Primitive, Scene } from "./scene.js";

class Raster {
  data: Uint8Array;

  constructor(readonly width: number, readonly height: number, background: Color) {
    this.data = new Uint8Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      this.data[3 * i] = background[0];
      this.data[3 * i + 1] = background[1];
      this.data[3 * i + 2] = background[2];
    }
  }

  set(x: number, y: number, c: Color): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = 3 * (y * this.width + x);
    this.data[i] = c[0];
    this.data[i + 1] = c[1];
    this.data[i + 2] = c[2];
  }

  fillRect(x0: number, y0: number, w: number, h: number, c: Color): void {
    for (let y = Math.round(y0); y < Math.round(y0 + h); y++) {
      for (let x = Math.round(x0); x < Math.round(x0 + w); x++) this.set(x, y, c);
    }
  }

  /** Bresenham line with square pen of the given width. */
  line(x1: number, y1: number, x2: number, y2: number, c: Color, width: number, dashed = false): void {
    let x = Math.round(x1);
    let y = Math.round(y1);
    const xe = Math.round(x2);
    const ye = Math.round(y2);
    const dx = Math.abs(xe - x);
    const dy = -Math.abs(ye - y);
    const sx = x < xe ? 1 : -1;
    const sy = y < ye ? 1 : -1;
    let err = dx + dy;
    const half = Math.floor(width / 2);
    let step = 0;
    for (;;) {
      const on = !dashed || step % 10 < 6;
      if (on) {
        for (let oy = -half; oy <= half; oy++) {
          for (let ox = -half; ox <= half; ox++) this.set(x + ox, y + oy, c);
        }
      }
      if (x === xe && y === ye) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
      step++;
    }
  }

  circle(cx: number, cy: number, r: number, c: Color): void {
    const x0 = Math.round(cx);
    const y0 = Math.round(cy);
    const rr = Math.ceil(r);
    for (let y = -rr; y <= rr; y++) {
      for (let x = -rr; x <= rr; x++) {
        if (x * x + y * y <= r * r + 0.5) this.set(x0 + x, y0 + y, c);
      }
    }
  }

  text(x: number, y: number, text: string, c: Color, size: number, anchor: "start" | "middle" | "end"): void {
    const scale = Math.max(1, Math.round(size / GLYPH_H));
    const w = textWidth(text, scale);
    let px = Math.round(anchor === "start" ? x : anchor === "end" ? x - w : x - w / 2);
    const top = Math.round(y - GLYPH_H * scale + scale); // y is the text baseline
    for (const ch of text) {
      const rows = glyphRows(ch);
      for (let ry = 0; ry < GLYPH_H; ry++) {
        for (let rx = 0; rx < GLYPH_W; rx++) {
          if (rows[ry][rx] === "X") {
            this.fillRect(px + rx * scale, top + ry * scale, scale, scale, c);
          }
        }
      }
      px += (GLYPH_W + GLYPH_SPACING) * scale;
    }
  }

  draw(p: Primitive): void {
    switch (p.kind) {
      case "line":
        this.line(p.x1, p.y1, p.x2, p.y2, p.color, p.width, p.dashed);
        break;
      case "polyline":
        for (let i = 1; i < p.points.length; i++) {
          const [xa, ya] = p.points[i - 1];
          const [xb, yb] = p.points[i];
          this.line(xa, ya, xb, yb, p.color, p.width);
        }
        break;
      case "rect":
        this.fillRect(p.x, p.y, p.w, p.h, p.fill);
        break;
      case "circle":
        this.circle(p.cx, p.cy, p.r, p.fill);
        break;
      case "text":
        this.text(p.x, p.y, p.text, p.color, p.size, p.anchor);
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// PNG encoding (8-bit RGB, filter 0 rows, single IDAT)
// ---------------------------------------------------------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < buf.length; i++) c = CRC_TABLE[(c ^ buf[i]) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(payload.length, 0);
  head.write(type, 4, "ascii");
  const body = Buffer.concat([head.subarray(4), Buffer.from(payload)]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head.subarray(0, 4), body, crc]);
}

export function sceneToPng(scene: Scene): Buffer {
  const raster = new Raster(scene.width, scene.height, scene.background);
  for (const p of scene.items) raster.draw(p);
  const { width, height } = scene;
  const stride = width * 3;
  const rows = Buffer.alloc((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    rows[y * (stride + 1)] = 0; // filter type 0
    Buffer.from(raster.data.buffer, y * stride, stride).copy(rows, y * (stride + 1) + 1);
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor RGB
  const idat = deflateSync(rows, { level: 9 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
