import { readFileSync } from "node:fs";

/** One results.csv row (the pdcontrol harness schema). */
export interface ResultRow {
  seed: number;
  t: number;
  cost: number;
  cumCost: number;
  oracleCumCost: number;
  regret: number;
}

const HEADER = "seed,t,cost,cum_cost,oracle_cum_cost,regret";

/**
 * Parse a harness results.csv. Malformed content raises an error naming the
 * offending line (1-based, including the header line).
 */
export function parseResultsCsv(text: string, source = "<input>"): ResultRow[] {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0 || lines[0].trim() !== HEADER) {
    throw new Error(`${source}:1: expected header '${HEADER}', got '${lines[0] ?? ""}'`);
  }
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 6) {
      throw new Error(`${source}:${i + 1}: expected 6 fields, got ${parts.length}`);
    }
    const nums = parts.map(Number);
    if (nums.some((v) => Number.isNaN(v))) {
      throw new Error(`${source}:${i + 1}: non-numeric field in '${lines[i]}'`);
    }
    rows.push({
      seed: nums[0],
      t: nums[1],
      cost: nums[2],
      cumCost: nums[3],
      oracleCumCost: nums[4],
      regret: nums[5],
    });
  }
  return rows;
}

export function readResultsCsv(path: string): ResultRow[] {
  return parseResultsCsv(readFileSync(path, "utf-8"), path);
}

/** Group rows into per-seed series ordered by t; seeds keep file order. */
export function groupBySeed(rows: ResultRow[]): Map<number, ResultRow[]> {
  const map = new Map<number, ResultRow[]>();
  for (const row of rows) {
    const bucket = map.get(row.seed);
    if (bucket === undefined) {
      map.set(row.seed, [row]);
    } else {
      bucket.push(row);
    }
  }
  for (const [seed, bucket] of map) {
    bucket.sort((a, b) => a.t - b.t);
    bucket.forEach((row, idx) => {
      if (row.t !== idx) {
        throw new Error(`seed ${seed}: time steps are not contiguous at t=${row.t}`);
      }
    });
  }
  return map;
}
