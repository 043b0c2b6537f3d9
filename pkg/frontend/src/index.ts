export { ema } from "./ema.js";
export { parseResultsCsv, readResultsCsv, groupBySeed } from "./csv.js";
export type { ResultRow } from "./csv.js";
export { aggregate, sidecarCsv } from "./series.js";
export type { AggregatedSeries, YMode } from "./series.js";
export { renderSvg } from "./svg.js";
export { render, PlotSpecSchema } from "./plot.js";
export type { PlotSpec, RenderResult } from "./plot.js";
