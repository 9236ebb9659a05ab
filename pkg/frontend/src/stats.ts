/** Median / interquartile statistics, computed in the linear scale. */

export interface BandPoint {
  t: number;
  median: number;
  q1: number;
  q3: number;
  n: number;
}

/** Linear-interpolation percentile (matches numpy's default). */
export function percentile(sorted: number[], p: number): number {
  const n = sorted.length;
  if (n === 0) {
    return NaN;
  }
  if (n === 1) {
    return sorted[0];
  }
  const idx = (p / 100) * (n - 1);
  const lo = Math.floor(idx);
  const hi = Math.ceil(idx);
  if (lo === hi) {
    return sorted[lo];
  }
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (idx - lo);
}

export function quartiles(values: number[]): { median: number; q1: number; q3: number } {
  const sorted = [...values].sort((a, b) => a - b);
  return {
    median: percentile(sorted, 50),
    q1: percentile(sorted, 25),
    q3: percentile(sorted, 75),
  };
}

/**
 * Per-time-bin median and IQR over a set of series sampled on the same grid
 * step; shorter series simply stop contributing (trials end at convergence).
 */
export function medianIqrBand(
  series: Array<{ t: number[]; v: number[] }>,
): BandPoint[] {
  const maxLen = Math.max(0, ...series.map((s) => s.t.length));
  const out: BandPoint[] = [];
  for (let k = 0; k < maxLen; k++) {
    const values: number[] = [];
    let t = NaN;
    for (const s of series) {
      if (k < s.t.length) {
        values.push(s.v[k]);
        t = s.t[k];
      }
    }
    if (values.length > 0) {
      const q = quartiles(values);
      out.push({ t, median: q.median, q1: q.q1, q3: q.q3, n: values.length });
    }
  }
  return out;
}
