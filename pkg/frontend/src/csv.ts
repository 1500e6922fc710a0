/**
 * Readers for the run-directory files written by the engine:
 *
 *   recall.csv    seq,worker,hit,moving_avg
 *   state.csv     seq,worker,user_entries,item_entries,pair_entries
 *   sweeps.csv    seq,worker,users_evicted,items_evicted,pairs_evicted
 *   summary.txt   flat `key = value` lines grouped under [section] headers
 */

import { readFileSync } from "fs";
import path from "path";

export interface RecallSeries {
  seq: number[];
  hit: number[];
  movingAvg: number[];
}

export interface StateRow {
  seq: number;
  worker: number;
  users: number;
  items: number;
  pairs: number;
}

function readText(dir: string, name: string): string {
  const file = path.join(dir, name);
  let text: string;
  try {
    text = readFileSync(file, "utf-8");
  } catch {
    throw new Error(`missing or unreadable input file: ${file}`);
  }
  return text;
}

function parseCsv(dir: string, name: string, header: string): string[][] {
  const file = path.join(dir, name);
  const lines = readText(dir, name).split("\n").filter((l) => l.length > 0);
  if (lines[0] !== header) {
    throw new Error(`${file}: expected header '${header}', got '${lines[0] ?? ""}'`);
  }
  if (lines.length < 2) {
    throw new Error(`${file}: no data rows`);
  }
  return lines.slice(1).map((line) => line.split(","));
}

export function readRecall(dir: string): RecallSeries {
  const rows = parseCsv(dir, "recall.csv", "seq,worker,hit,moving_avg");
  const seq: number[] = [];
  const hit: number[] = [];
  const movingAvg: number[] = [];
  for (const row of rows) {
    seq.push(Number(row[0]));
    hit.push(Number(row[2]));
    movingAvg.push(Number(row[3]));
  }
  return { seq, hit, movingAvg };
}

export function readState(dir: string): StateRow[] {
  const rows = parseCsv(dir, "state.csv",
    "seq,worker,user_entries,item_entries,pair_entries");
  return rows.map((row) => ({
    seq: Number(row[0]),
    worker: Number(row[1]),
    users: Number(row[2]),
    items: Number(row[3]),
    pairs: Number(row[4]),
  }));
}

/** Flat key lookup across every section of summary.txt. */
export function readSummaryValue(dir: string, key: string): string {
  const text = readText(dir, "summary.txt");
  for (const line of text.split("\n")) {
    const idx = line.indexOf("=");
    if (idx > 0 && line.slice(0, idx).trim() === key) {
      return line.slice(idx + 1).trim();
    }
  }
  throw new Error(`${path.join(dir, "summary.txt")}: no '${key}' entry`);
}

export function readThroughput(dir: string): number {
  const value = Number(readSummaryValue(dir, "throughput_eps"));
  if (!Number.isFinite(value)) {
    throw new Error(`${path.join(dir, "summary.txt")}: bad throughput_eps`);
  }
  return value;
}
