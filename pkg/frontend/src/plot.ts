import { writeFileSync } from "node:fs";
import { z } from "zod";

import { readResultsCsv } from "./csv.js";
import { AggregatedSeries, aggregate, sidecarCsv, YMode } from "./series.js";
import { renderSvg } from "./svg.js";

export const PlotSpecSchema = z.object({
  inputs: z
    .array(
      z.object({
        path: z.string(),
        label: z.string(),
        color: z.string().optional(),
      }),
    )
    .min(1),
  output: z.string(),
  mode: z.enum(["cost", "avg_cost", "regret"]).default("avg_cost"),
  beta: z.number().min(0).lt(1).default(0.1),
  title: z.string().optional(),
});

export type PlotSpec = z.infer<typeof PlotSpecSchema>;

export interface RenderResult {
  imagePath: string;
  sidecarPath: string;
  series: AggregatedSeries[];
}

const Y_LABEL: Record<YMode, string> = {
  cost: "instantaneous cost",
  avg_cost: "cumulative cost / t",
  regret: "regret",
};

/**
 * Render a figure plus its data sidecar.  Smoothing happens per seed before
 * the cross-seed mean/stderr; the sidecar holds exactly the plotted numbers.
 */
export function render(spec: PlotSpec): RenderResult {
  if (!spec.output.endsWith(".svg")) {
    if (spec.output.endsWith(".png")) {
      throw new Error("png output needs a raster backend that is not bundled; write .svg instead");
    }
    throw new Error(`unsupported output extension on '${spec.output}' (use .svg)`);
  }
  const series = spec.inputs.map((input) =>
    aggregate(readResultsCsv(input.path), spec.mode, spec.beta, input.label, input.color),
  );
  const svg = renderSvg(series, { title: spec.title, yLabel: Y_LABEL[spec.mode] });
  writeFileSync(spec.output, svg, "utf-8");
  const sidecarPath = `${spec.output}.data.csv`;
  writeFileSync(sidecarPath, sidecarCsv(series), "utf-8");
  return { imagePath: spec.output, sidecarPath, series };
}
