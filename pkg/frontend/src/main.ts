#!/usr/bin/env node
/**
 * Figure renderer for run directories.
 *
 * Usage:
 *   node dist/src/main.js --kind recall_curve --runs runA runB \
 *       --labels central ni=2 --out recall.svg
 */

import { writeFileSync } from "fs";
import { FigureSpec, KINDS, render } from "./figures.js";

function parseArgs(argv: string[]): FigureSpec {
  let kind: string | undefined;
  const runs: string[] = [];
  const labels: string[] = [];
  let out: string | undefined;
  let collecting: string[] | null = null;
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i]!;
    if (arg === "--kind") {
      kind = argv[++i];
      collecting = null;
    } else if (arg === "--runs") {
      collecting = runs;
    } else if (arg === "--labels") {
      collecting = labels;
    } else if (arg === "--out") {
      out = argv[++i];
      collecting = null;
    } else if (arg.startsWith("--")) {
      throw new Error(`unknown flag ${arg}`);
    } else if (collecting) {
      collecting.push(arg);
    } else {
      throw new Error(`unexpected argument ${arg}`);
    }
  }
  if (!kind || !(KINDS as readonly string[]).includes(kind)) {
    throw new Error(`--kind must be one of ${KINDS.join(", ")}`);
  }
  if (runs.length === 0) throw new Error("--runs needs at least one run directory");
  if (!out) throw new Error("--out is required");
  return { kind: kind as FigureSpec["kind"], runs, labels, out };
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const result = render(spec);
    writeFileSync(spec.out, result.svg, "utf-8");
    console.log(`${spec.out}: ${spec.kind} over ${spec.runs.length} run(s)`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!)) {
  process.exit(main(process.argv.slice(2)));
}
