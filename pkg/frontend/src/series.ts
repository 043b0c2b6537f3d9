import { ema } from "./ema.js";
import { groupBySeed, ResultRow } from "./csv.js";

export type YMode = "cost" | "avg_cost" | "regret";

export interface AggregatedSeries {
  label: string;
  color?: string;
  t: number[];
  mean: number[];
  stderr: number[];
  nSeeds: number;
}

function extract(rows: ResultRow[], mode: YMode): number[] {
  switch (mode) {
    case "cost":
      return rows.map((r) => r.cost);
    case "avg_cost":
      return rows.map((r) => r.cumCost / (r.t + 1));
    case "regret":
      return rows.map((r) => r.regret);
  }
}

/**
 * Turn one results file into a plotted series: per-seed y extraction, EMA
 * smoothing (applied before any cross-seed statistics), then mean and
 * stderr = sd/sqrt(N) across seeds at each step.
 */
export function aggregate(rows: ResultRow[], mode: YMode, beta: number, label: string,
                          color?: string): AggregatedSeries {
  const bySeed = groupBySeed(rows);
  if (bySeed.size === 0) {
    throw new Error(`${label}: no data rows`);
  }
  const seedSeries: number[][] = [];
  let T: number | null = null;
  for (const [seed, bucket] of bySeed) {
    if (T === null) {
      T = bucket.length;
    } else if (bucket.length !== T) {
      throw new Error(`seed ${seed}: expected ${T} steps, got ${bucket.length}`);
    }
    seedSeries.push(ema(extract(bucket, mode), beta));
  }
  const n = seedSeries.length;
  const mean = new Array<number>(T!);
  const stderr = new Array<number>(T!);
  for (let t = 0; t < T!; t++) {
    let acc = 0;
    for (const s of seedSeries) acc += s[t];
    const m = acc / n;
    mean[t] = m;
    if (n < 2) {
      stderr[t] = 0;
    } else {
      let sq = 0;
      for (const s of seedSeries) sq += (s[t] - m) * (s[t] - m);
      stderr[t] = Math.sqrt(sq / (n - 1)) / Math.sqrt(n);
    }
  }
  return { label, color, t: Array.from({ length: T! }, (_, i) => i), mean, stderr, nSeeds: n };
}

/** Sidecar CSV of exactly the numbers that get plotted. */
export function sidecarCsv(series: AggregatedSeries[]): string {
  const lines = ["series,t,mean,stderr"];
  for (const s of series) {
    for (let i = 0; i < s.t.length; i++) {
      lines.push(`${s.label},${s.t[i]},${String(s.mean[i])},${String(s.stderr[i])}`);
    }
  }
  return lines.join("\n") + "\n";
}
