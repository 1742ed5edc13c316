/** Scene -> SVG text (deterministic string assembly, monospace text). */

import { Color, Primitive, Scene } from "./scene.js";

function rgb(c: Color): string {
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

function num(v: number): string {
  return String(Math.round(v * 100) / 100);
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function element(p: Primitive): string {
  switch (p.kind) {
    case "line": {
      const dash = p.dashed ? ` stroke-dasharray="6,4"` : "";
      return `<line x1="${num(p.x1)}" y1="${num(p.y1)}" x2="${num(p.x2)}" y2="${num(p.y2)}" stroke="${rgb(p.color)}" stroke-width="${p.width}"${dash}/>`;
    }
    case "polyline": {
      const pts = p.points.map(([x, y]) => `${num(x)},${num(y)}`).join(" ");
      return `<polyline points="${pts}" fill="none" stroke="${rgb(p.color)}" stroke-width="${p.width}"/>`;
    }
    case "rect":
      return `<rect x="${num(p.x)}" y="${num(p.y)}" width="${num(p.w)}" height="${num(p.h)}" fill="${rgb(p.fill)}"/>`;
    case "circle":
      return `<circle cx="${num(p.cx)}" cy="${num(p.cy)}" r="${num(p.r)}" fill="${rgb(p.fill)}"/>`;
    case "text": {
      const anchor = p.anchor === "start" ? "start" : p.anchor === "end" ? "end" : "middle";
      return `<text x="${num(p.x)}" y="${num(p.y)}" font-family="monospace" font-size="${p.size}" fill="${rgb(p.color)}" text-anchor="${anchor}">${esc(p.text)}</text>`;
    }
  }
}

export function sceneToSvg(scene: Scene): string {
  const lines = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">`,
    `<rect width="${scene.width}" height="${scene.height}" fill="${rgb(scene.background)}"/>`,
  ];
  for (const p of scene.items) lines.push(element(p));
  lines.push("</svg>");
  return lines.join("\n") + "\n";
}
