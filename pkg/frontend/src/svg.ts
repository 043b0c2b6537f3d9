import { AggregatedSeries } from "./series.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

interface Layout {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

const DEFAULT_LAYOUT: Layout = {
  width: 720,
  height: 440,
  margin: { top: 24, right: 24, bottom: 48, left: 64 },
};

function linearScale(domain: [number, number], range: [number, number]) {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function ticks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += s) out.push(v);
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Math.round(v * 1e6) / 1e6);
}

/** Render mean lines with +/- stderr bands into a standalone SVG document. */
export function renderSvg(series: AggregatedSeries[], options: { title?: string; yLabel?: string } = {},
                          layout: Layout = DEFAULT_LAYOUT): string {
  if (series.length === 0) {
    throw new Error("nothing to plot");
  }
  const { width, height, margin } = layout;
  const innerW = width - margin.left - margin.right;
  const innerH = height - margin.top - margin.bottom;

  let yLo = Infinity;
  let yHi = -Infinity;
  let xHi = 1;
  for (const s of series) {
    xHi = Math.max(xHi, s.t[s.t.length - 1]);
    for (let i = 0; i < s.t.length; i++) {
      yLo = Math.min(yLo, s.mean[i] - s.stderr[i]);
      yHi = Math.max(yHi, s.mean[i] + s.stderr[i]);
    }
  }
  if (yLo === yHi) {
    yLo -= 1;
    yHi += 1;
  }
  const x = linearScale([0, xHi], [margin.left, margin.left + innerW]);
  const y = linearScale([yLo, yHi], [margin.top + innerH, margin.top]);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  for (const tx of ticks(0, xHi, 6)) {
    const px = x(tx);
    parts.push(`<line x1="${px}" y1="${margin.top}" x2="${px}" y2="${margin.top + innerH}" stroke="#eee"/>`);
    parts.push(`<text x="${px}" y="${margin.top + innerH + 18}" font-size="11" text-anchor="middle" fill="#444">${fmt(tx)}</text>`);
  }
  for (const ty of ticks(yLo, yHi, 6)) {
    const py = y(ty);
    parts.push(`<line x1="${margin.left}" y1="${py}" x2="${margin.left + innerW}" y2="${py}" stroke="#eee"/>`);
    parts.push(`<text x="${margin.left - 6}" y="${py + 4}" font-size="11" text-anchor="end" fill="#444">${fmt(ty)}</text>`);
  }
  parts.push(`<rect x="${margin.left}" y="${margin.top}" width="${innerW}" height="${innerH}" fill="none" stroke="#999"/>`);

  series.forEach((s, k) => {
    const color = s.color ?? PALETTE[k % PALETTE.length];
    const upper = s.t.map((t, i) => `${x(t)},${y(s.mean[i] + s.stderr[i])}`);
    const lower = s.t.map((t, i) => `${x(t)},${y(s.mean[i] - s.stderr[i])}`).reverse();
    parts.push(`<polygon points="${upper.join(" ")} ${lower.join(" ")}" fill="${color}" opacity="0.15"/>`);
    const line = s.t.map((t, i) => `${x(t)},${y(s.mean[i])}`).join(" ");
    parts.push(`<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    const lx = margin.left + 10;
    const ly = margin.top + 16 + 16 * k;
    parts.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${lx + 28}" y="${ly}" font-size="12" fill="#222">${escapeXml(s.label)} (n=${s.nSeeds})</text>`);
  });

  if (options.title) {
    parts.push(`<text x="${width / 2}" y="16" font-size="13" text-anchor="middle" fill="#111">${escapeXml(options.title)}</text>`);
  }
  parts.push(`<text x="${width / 2}" y="${height - 10}" font-size="12" text-anchor="middle" fill="#222">t</text>`);
  if (options.yLabel) {
    parts.push(`<text x="14" y="${height / 2}" font-size="12" text-anchor="middle" fill="#222" transform="rotate(-90 14 ${height / 2})">${escapeXml(options.yLabel)}</text>`);
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
