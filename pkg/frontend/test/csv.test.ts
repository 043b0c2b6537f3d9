import { describe, expect, it } from "vitest";

import { groupBySeed, parseResultsCsv } from "../src/csv.js";

const GOOD = [
  "seed,t,cost,cum_cost,oracle_cum_cost,regret",
  "0,0,1.0,1.0,0.5,0.5",
  "0,1,2.0,3.0,1.0,2.0",
  "1,0,0.25,0.25,0.25,0.0",
  "1,1,0.75,1.0,0.5,0.5",
].join("\n") + "\n";

describe("parseResultsCsv", () => {
  it("parses the harness schema", () => {
    const rows = parseResultsCsv(GOOD, "good.csv");
    expect(rows).toHaveLength(4);
    expect(rows[1]).toEqual({ seed: 0, t: 1, cost: 2.0, cumCost: 3.0, oracleCumCost: 1.0, regret: 2.0 });
  });

  it("rejects a wrong header, naming line 1", () => {
    expect(() => parseResultsCsv("a,b,c\n1,2,3\n", "bad.csv")).toThrow(/bad\.csv:1/);
  });

  it("names the offending data line", () => {
    const text = GOOD + "0,2,not_a_number,4.0,2.0,2.0\n";
    expect(() => parseResultsCsv(text, "bad.csv")).toThrow(/bad\.csv:6/);
  });

  it("rejects short rows with the line number", () => {
    const text = GOOD + "0,2,1.0\n";
    expect(() => parseResultsCsv(text, "bad.csv")).toThrow(/bad\.csv:6: expected 6 fields/);
  });
});

describe("groupBySeed", () => {
  it("splits rows per seed ordered by t", () => {
    const grouped = groupBySeed(parseResultsCsv(GOOD));
    expect([...grouped.keys()]).toEqual([0, 1]);
    expect(grouped.get(1)!.map((r) => r.t)).toEqual([0, 1]);
  });

  it("rejects gaps in t", () => {
    const text = [
      "seed,t,cost,cum_cost,oracle_cum_cost,regret",
      "0,0,1.0,1.0,0.5,0.5",
      "0,2,2.0,3.0,1.0,2.0",
    ].join("\n") + "\n";
    expect(() => groupBySeed(parseResultsCsv(text))).toThrow(/contiguous/);
  });
});
