#!/usr/bin/env node
/**
 * Figure renderer for simulation traces.
 *
 * Usage:
 *   switchstab-plot <trajectory|norms|gramian> --trace trace.csv \
 *       --switches switches.csv --out figure.svg [--gmin 5e-4]
 */

import { writeFileSync } from "fs";
import { FigureKind, FigureSpec, renderFigure } from "./figures.js";

function parseArgs(argv: string[]): FigureSpec {
  const figure = argv[0];
  if (figure !== "trajectory" && figure !== "norms" && figure !== "gramian") {
    throw new Error(`unknown figure ${JSON.stringify(figure)}; expected trajectory, norms or gramian`);
  }
  const options = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed option near ${key}`);
    }
    options.set(key.slice(2), value);
  }
  for (const needed of ["trace", "switches", "out"]) {
    if (!options.has(needed)) {
      throw new Error(`missing required option --${needed}`);
    }
  }
  const spec: FigureSpec = {
    figure: figure as FigureKind,
    tracePath: options.get("trace")!,
    switchesPath: options.get("switches")!,
    outPath: options.get("out")!,
  };
  if (options.has("gmin")) {
    const g = Number(options.get("gmin"));
    if (!isFinite(g) || g <= 0) throw new Error("--gmin must be a positive number");
    spec.gMin = g;
  }
  return spec;
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const svg = renderFigure(spec);
    writeFileSync(spec.outPath!, svg);
    console.log(`wrote ${spec.outPath}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
