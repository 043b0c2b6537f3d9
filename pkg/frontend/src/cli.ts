#!/usr/bin/env node
import { readFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { PlotSpecSchema, render } from "./plot.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName("pdplot")
    .command("$0 [csvs..]", "render harness results into a figure with stderr bands")
    .option("spec", { type: "string", describe: "JSON plot spec file" })
    .option("labels", { type: "array", describe: "one label per positional CSV" })
    .option("out", { type: "string", default: "figure.svg" })
    .option("mode", { choices: ["cost", "avg_cost", "regret"] as const, default: "avg_cost" })
    .option("beta", { type: "number", default: 0.1, describe: "EMA smoothing factor in [0,1)" })
    .option("title", { type: "string" })
    .strict()
    .help()
    .parse();

  try {
    let spec;
    if (args.spec) {
      spec = PlotSpecSchema.parse(JSON.parse(readFileSync(args.spec, "utf-8")));
    } else {
      const csvs = (args.csvs as string[] | undefined) ?? [];
      if (csvs.length === 0) {
        console.error("provide --spec or positional results.csv paths");
        return 2;
      }
      const labels = (args.labels as string[] | undefined) ?? csvs.map((_, i) => `series ${i + 1}`);
      if (labels.length !== csvs.length) {
        console.error(`got ${csvs.length} csvs but ${labels.length} labels`);
        return 2;
      }
      spec = PlotSpecSchema.parse({
        inputs: csvs.map((path, i) => ({ path, label: String(labels[i]) })),
        output: args.out,
        mode: args.mode,
        beta: args.beta,
        title: args.title,
      });
    }
    const result = render(spec);
    console.log(`wrote ${result.imagePath} and ${result.sidecarPath}`);
    return 0;
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined && import.meta.url.endsWith(
  process.argv[1].split("/").pop() ?? "",
);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
