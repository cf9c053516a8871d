export interface Point {
  x: number;
  y: number;
}

/** Finite-size rescaling of the control parameter: beta - ln(L)/2. */
export function collapseX(L: number, beta: number): number {
  return beta - Math.log(L) / 2;
}

/** Susceptibility rescaling chi * L^-(2-eta). */
export function collapseChi(L: number, chi: number, eta: number): number {
  return chi * Math.pow(L, -(2 - eta));
}

/** Linear crossing of two curves sampled on a shared x grid; returns the
 * interpolated x of the first sign change of (a - b), or null. */
export function firstCrossing(
  xs: number[], a: number[], b: number[],
): number | null {
  for (let i = 0; i + 1 < xs.length; i += 1) {
    const d0 = a[i] - b[i];
    const d1 = a[i + 1] - b[i + 1];
    if (d0 === 0) return xs[i];
    if (d0 * d1 < 0) {
      const f = Math.abs(d0) / (Math.abs(d0) + Math.abs(d1));
      return xs[i] + f * (xs[i + 1] - xs[i]);
    }
  }
  return null;
}

export interface AxisScale {
  toPixel(v: number): number;
  ticks: number[];
}

export function linearScale(
  lo: number, hi: number, pixLo: number, pixHi: number, nTicks = 5,
): AxisScale {
  const span = hi - lo || 1;
  const step = niceStep(span / nTicks);
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * Math.abs(step); v += step) {
    ticks.push(roundTo(v, step));
  }
  return {
    toPixel: (v: number) => pixLo + ((v - lo) / span) * (pixHi - pixLo),
    ticks,
  };
}

export function logScale(
  lo: number, hi: number, pixLo: number, pixHi: number,
): AxisScale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const ticks: number[] = [];
  for (let d = Math.ceil(llo); d <= Math.floor(lhi); d += 1) {
    ticks.push(Math.pow(10, d));
  }
  return {
    toPixel: (v: number) => pixLo + ((Math.log10(v) - llo) / span) * (pixHi - pixLo),
    ticks,
  };
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

function roundTo(v: number, step: number): number {
  const digits = Math.max(0, -Math.floor(Math.log10(step)) + 2);
  return Number(v.toFixed(digits));
}
