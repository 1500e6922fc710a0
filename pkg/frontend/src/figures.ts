/**
 * The four figure kinds rendered from run directories.
 *
 * Each renderer returns the SVG plus the numbers the caption prints, so
 * tests can confirm decimation never changes what is reported: recall
 * curves plot moving_avg against seq exactly as stored, thinned only by
 * stride for display, and the first and last points always survive.
 */

import { readRecall, readState, readThroughput } from "./csv.js";
import { Chart, Series, color } from "./svg.js";

export const KINDS = ["recall_curve", "state_histogram", "state_timeline",
  "throughput_bars"] as const;
export type FigureKind = (typeof KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  runs: string[];
  labels: string[];
  out: string;
}

export interface RenderResult {
  svg: string;
  /** per-run numbers echoed in the caption (endpoint values, totals) */
  caption: Record<string, number>;
}

const MAX_POINTS = 20_000;

/** Stride-thin a series for display, always keeping the final point. */
export function decimate<T>(values: T[], maxPoints = MAX_POINTS): T[] {
  if (values.length <= maxPoints) return values;
  const stride = Math.ceil(values.length / maxPoints);
  const out: T[] = [];
  for (let i = 0; i < values.length; i += stride) out.push(values[i]!);
  if (out[out.length - 1] !== values[values.length - 1]) {
    out.push(values[values.length - 1]!);
  }
  return out;
}

function resolveLabels(runs: string[], labels: string[]): string[] {
  return runs.map((run, i) => labels[i] ?? run);
}

export function renderRecallCurve(runs: string[], labels: string[]): RenderResult {
  const names = resolveLabels(runs, labels);
  const data = runs.map((dir) => readRecall(dir));
  const maxSeq = Math.max(...data.map((d) => d.seq[d.seq.length - 1] ?? 0));
  const maxAvg = Math.max(...data.map((d) => Math.max(...d.movingAvg)));
  const chart = new Chart("Moving-average Recall@N", "event", "moving recall",
    [0, maxSeq], [0, Math.max(maxAvg * 1.05, 0.01)]);
  const caption: Record<string, number> = {};
  const captionBits: string[] = [];
  data.forEach((series, i) => {
    const points: Array<[number, number]> = decimate(
      series.seq.map((s, j) => [s, series.movingAvg[j]!] as [number, number]));
    chart.polyline({ label: names[i]!, color: color(i), points });
    const final = series.movingAvg[series.movingAvg.length - 1]!;
    const cumulative = series.hit.reduce((a, b) => a + b, 0) / series.hit.length;
    caption[`${names[i]}_final`] = final;
    caption[`${names[i]}_cumulative`] = cumulative;
    captionBits.push(`${names[i]}: final ${final.toFixed(6)}, ` +
      `cumulative ${cumulative.toFixed(6)}`);
  });
  chart.legend(names.map((label, i) => ({ label, color: color(i) })));
  chart.caption(captionBits.join("  |  "));
  return { svg: chart.render(), caption };
}

function totalsByWorker(dir: string): Map<number, number[]> {
  const perWorker = new Map<number, number[]>();
  for (const row of readState(dir)) {
    const total = row.users + row.items + row.pairs;
    if (!perWorker.has(row.worker)) perWorker.set(row.worker, []);
    perWorker.get(row.worker)!.push(total);
  }
  return perWorker;
}

/** Frequency of per-worker entry totals across snapshots, one overlay per
 * (run, worker). */
export function renderStateHistogram(runs: string[], labels: string[]): RenderResult {
  const names = resolveLabels(runs, labels);
  const series: Series[] = [];
  const caption: Record<string, number> = {};
  let maxTotal = 0;
  runs.forEach((dir, i) => {
    for (const totals of totalsByWorker(dir).values()) {
      maxTotal = Math.max(maxTotal, ...totals);
    }
  });
  const bins = 24;
  const binWidth = Math.max(1, Math.ceil((maxTotal + 1) / bins));
  let maxFreq = 0;
  runs.forEach((dir, i) => {
    const perWorker = totalsByWorker(dir);
    let colorIndex = 0;
    for (const [worker, totals] of [...perWorker.entries()].sort((a, b) => a[0] - b[0])) {
      const freq = new Array<number>(bins).fill(0);
      for (const total of totals) {
        freq[Math.min(bins - 1, Math.floor(total / binWidth))]! += 1;
      }
      maxFreq = Math.max(maxFreq, ...freq);
      series.push({
        label: `${names[i]} w${worker}`,
        color: color(i * 4 + colorIndex),
        points: freq.map((f, b) => [b * binWidth, f] as [number, number]),
      });
      colorIndex += 1;
      caption[`${names[i]}_w${worker}_snapshots`] = totals.length;
    }
  });
  const chart = new Chart("State-size distribution (entries per worker)",
    "entries in worker state", "snapshot frequency",
    [0, binWidth * bins], [0, Math.max(maxFreq, 1)]);
  for (const s of series) chart.steps(s);
  chart.legend(series.map(({ label, color: c }) => ({ label, color: c })));
  return { svg: chart.render(), caption };
}

/** Total stored entries across workers over the stream, one line per run. */
export function renderStateTimeline(runs: string[], labels: string[]): RenderResult {
  const names = resolveLabels(runs, labels);
  const caption: Record<string, number> = {};
  const lines: Series[] = [];
  let maxSeq = 0;
  let maxTotal = 0;
  runs.forEach((dir, i) => {
    const bySeq = new Map<number, number>();
    for (const row of readState(dir)) {
      bySeq.set(row.seq, (bySeq.get(row.seq) ?? 0) + row.users + row.items + row.pairs);
    }
    const points = [...bySeq.entries()].sort((a, b) => a[0] - b[0]);
    maxSeq = Math.max(maxSeq, points[points.length - 1]?.[0] ?? 0);
    maxTotal = Math.max(maxTotal, ...points.map(([, t]) => t));
    lines.push({ label: names[i]!, color: color(i), points });
    caption[`${names[i]}_final_total`] = points[points.length - 1]?.[1] ?? 0;
  });
  const chart = new Chart("State growth over the stream", "event",
    "total stored entries", [0, maxSeq], [0, maxTotal * 1.05]);
  for (const line of lines) chart.polyline(line);
  chart.legend(names.map((label, i) => ({ label, color: color(i) })));
  return { svg: chart.render(), caption };
}

export function renderThroughputBars(runs: string[], labels: string[]): RenderResult {
  const names = resolveLabels(runs, labels);
  const caption: Record<string, number> = {};
  const values = runs.map((dir, i) => {
    const eps = readThroughput(dir);
    caption[`${names[i]}_throughput_eps`] = eps;
    return eps;
  });
  const chart = new Chart("Throughput", "configuration", "events / second",
    [0, runs.length], [0, Math.max(...values) * 1.15]);
  values.forEach((eps, i) => {
    chart.bar(i + 0.2, 0.6, eps, color(i));
    chart.text(i + 0.5, eps, eps.toFixed(0));
    chart.text(i + 0.5, 0, names[i]!);
  });
  return { svg: chart.render(), caption };
}

export function render(spec: FigureSpec): RenderResult {
  switch (spec.kind) {
    case "recall_curve": return renderRecallCurve(spec.runs, spec.labels);
    case "state_histogram": return renderStateHistogram(spec.runs, spec.labels);
    case "state_timeline": return renderStateTimeline(spec.runs, spec.labels);
    case "throughput_bars": return renderThroughputBars(spec.runs, spec.labels);
  }
}
