/**
 * Statistics used for annotations. The formulas mirror the backend exactly
 * (same covariance form and summation order) so that recomputed slopes match
 * the manifest values to 1e-12.
 */

export function mean(xs: number[]): number {
  let s = 0;
  for (const x of xs) s += x;
  return s / xs.length;
}

export function fitLoglogSlope(x: number[], y: number[]): number {
  const lx = x.map((v) => Math.log(Math.abs(v)));
  const ly = y.map((v) => Math.log(Math.max(v, 1e-300)));
  const xbar = mean(lx);
  const ybar = mean(ly);
  let num = 0;
  let den = 0;
  for (let i = 0; i < lx.length; i++) {
    num += (lx[i] - xbar) * (ly[i] - ybar);
    den += (lx[i] - xbar) * (lx[i] - xbar);
  }
  return num / den;
}

/** Geometric mean of the trailing window used for the series ratio. */
export function geomMean(xs: number[]): number {
  let s = 0;
  for (const x of xs) s += Math.log(x);
  return Math.exp(s / xs.length);
}

export function maxOverMin(xs: number[]): number {
  return Math.max(...xs) / Math.min(...xs);
}
