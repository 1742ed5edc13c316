#!/usr/bin/env node
/**
 * airjam-plot: render experiment CSV logs to SVG and PNG.
 *
 *   airjam-plot --spec spec.json
 *   airjam-plot <decay|ratewindow|security> <csv> <out-dir>
 *
 * The spec file is a small JSON object: {"kind", "csv", "out", "title"?,
 * "xlabel"?, "ylabel"?, "ycolumn"?, "logy"?}.  Both image files are always
 * written; input CSVs are never modified and reruns are byte-identical.
 */

import { mkdirSync, readFileSync, statSync, writeFileSync } from "fs";
import { join } from "path";

import { EmptyData, MissingColumn } from "./csv.js";
import { PlotKind, PlotSpec, buildScene } from "./plots.js";
import { sceneToPng } from "./png.js";
import { sceneToSvg } from "./svg.js";

export interface RenderResult {
  svgPath: string;
  pngPath: string;
  droppedNonpositive: number;
  warnings: string[];
}

function outBase(spec: PlotSpec): string {
  let isDir = false;
  try {
    isDir = statSync(spec.out).isDirectory();
  } catch {
    isDir = !/\.[a-z]+$/i.test(spec.out) && !spec.out.includes(".");
  }
  if (isDir || spec.out.endsWith("/")) {
    mkdirSync(spec.out, { recursive: true });
    return join(spec.out, spec.kind);
  }
  return spec.out.replace(/\.(svg|png)$/i, "");
}

export function render(spec: PlotSpec): RenderResult {
  const built = buildScene(spec);
  const base = outBase(spec);
  const svgPath = `${base}.svg`;
  const pngPath = `${base}.png`;
  writeFileSync(svgPath, sceneToSvg(built.scene));
  writeFileSync(pngPath, sceneToPng(built.scene));
  return {
    svgPath,
    pngPath,
    droppedNonpositive: built.droppedNonpositive,
    warnings: built.warnings,
  };
}

const KINDS: PlotKind[] = ["decay", "ratewindow", "security"];

function usage(): void {
  console.error(
    "usage: airjam-plot --spec SPEC.json\n" +
      "       airjam-plot <decay|ratewindow|security> <csv> <out-dir>",
  );
}

export function main(argv: string[]): number {
  let spec: PlotSpec;
  if (argv[0] === "--spec") {
    if (argv.length !== 2) {
      usage();
      return 2;
    }
    try {
      spec = JSON.parse(readFileSync(argv[1], "utf-8")) as PlotSpec;
    } catch (err) {
      console.error(`error: cannot read spec: ${(err as Error).message}`);
      return 2;
    }
    if (!spec.kind || !spec.csv || !spec.out) {
      console.error("error: spec needs 'kind', 'csv' and 'out'");
      return 2;
    }
  } else if (argv.length === 3 && KINDS.includes(argv[0] as PlotKind)) {
    spec = { kind: argv[0] as PlotKind, csv: argv[1], out: argv[2] };
  } else {
    usage();
    return 2;
  }
  try {
    const res = render(spec);
    for (const warning of res.warnings) console.error(`warning: ${warning}`);
    console.log(`wrote ${res.svgPath} and ${res.pngPath}`);
    return 0;
  } catch (err) {
    if (err instanceof MissingColumn || err instanceof EmptyData) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 3;
  }
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
