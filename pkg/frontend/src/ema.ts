/**
 * Exponential moving average with smoothing factor beta in [0, 1).
 *
 * y[0] = x[0]; y[t] = beta * y[t-1] + (1 - beta) * x[t].
 * beta = 0 reproduces the input exactly.
 */
export function ema(values: readonly number[], beta: number): number[] {
  if (!(beta >= 0 && beta < 1)) {
    throw new Error(`smoothing factor must lie in [0, 1), got ${beta}`);
  }
  const out = new Array<number>(values.length);
  for (let t = 0; t < values.length; t++) {
    out[t] = t === 0 ? values[0] : beta * out[t - 1] + (1 - beta) * values[t];
  }
  return out;
}
