import { BenchRow, SchemaError, SummaryRow } from './csv.js';
import {
  AxisScale, collapseChi, collapseX, firstCrossing, linearScale, logScale,
} from './scale.js';
import { HEIGHT, MARGIN, SERIES_COLORS, Svg, WIDTH, fmtTick } from './svg.js';

export const FIGURE_KINDS = [
  'binder_vs_beta', 'chi_vs_beta', 'ce_lowT', 'g_collapse', 'chi_collapse',
  'tau_bars',
] as const;

export type FigureKind = typeof FIGURE_KINDS[number];

interface Series {
  label: string;
  color: string;
  points: Array<{ x: number; y: number; lo: number; hi: number }>;
}

function pick(rows: SummaryRow[], observable: string): SummaryRow[] {
  const out = rows.filter((r) => r.observable === observable);
  if (out.length === 0) {
    throw new SchemaError(`no rows for observable ${observable}`);
  }
  return out;
}

function byL(rows: SummaryRow[]): Map<number, SummaryRow[]> {
  const groups = new Map<number, SummaryRow[]>();
  for (const r of [...rows].sort((a, b) => a.L - b.L || a.beta - b.beta)) {
    const list = groups.get(r.L) ?? [];
    list.push(r);
    groups.set(r.L, list);
  }
  return groups;
}

function drawFrame(
  svg: Svg, xScale: AxisScale, yScale: AxisScale,
  xLabel: string, yLabel: string,
): void {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  svg.line(x0, y0, x1, y0, '#222');
  svg.line(x0, y0, x0, y1, '#222');
  for (const t of xScale.ticks) {
    const px = xScale.toPixel(t);
    svg.line(px, y0, px, y0 + 5, '#222');
    svg.text(px, y0 + 20, fmtTick(t), { size: 11 });
  }
  for (const t of yScale.ticks) {
    const py = yScale.toPixel(t);
    svg.line(x0 - 5, py, x0, py, '#222');
    svg.text(x0 - 8, py + 4, fmtTick(t), { anchor: 'end', size: 11 });
    svg.line(x0, py, x1, py, '#eeeeee');
  }
  svg.text((x0 + x1) / 2, HEIGHT - 12, xLabel);
  svg.text(18, (y0 + y1) / 2, yLabel, { rotate: true });
}

function drawLegend(svg: Svg, labels: Array<[string, string]>): void {
  let y = MARGIN.top + 12;
  for (const [label, color] of labels) {
    svg.line(WIDTH - MARGIN.right - 120, y - 4, WIDTH - MARGIN.right - 95, y - 4, color, 2);
    svg.text(WIDTH - MARGIN.right - 90, y, label, { anchor: 'start', size: 11 });
    y += 16;
  }
}

function renderSeries(
  title: string, xLabel: string, yLabel: string, series: Series[],
  opts: { logY?: boolean; crossingMarker?: boolean } = {},
): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.flatMap(
    (p) => [p.y, ...(Number.isFinite(p.lo) ? [p.lo, p.hi] : [])],
  ));
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const pad = 0.05 * (xhi - xlo || 1);
  const xScale = linearScale(xlo - pad, xhi + pad, MARGIN.left, WIDTH - MARGIN.right);
  let yScale: AxisScale;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  if (opts.logY) {
    const positive = ys.filter((v) => v > 0);
    if (positive.length === 0) throw new SchemaError('no positive values for log scale');
    yScale = logScale(Math.min(...positive) / 1.5, Math.max(...positive) * 1.5, y0, y1);
  } else {
    const ylo = Math.min(...ys);
    const yhi = Math.max(...ys);
    const ypad = 0.08 * (yhi - ylo || 1);
    yScale = linearScale(ylo - ypad, yhi + ypad, y0, y1);
  }
  const svg = new Svg();
  svg.open(title);
  drawFrame(svg, xScale, yScale, xLabel, yLabel);
  for (const s of series) {
    const pts = s.points.map(
      (p) => [xScale.toPixel(p.x), yScale.toPixel(p.y)] as [number, number],
    );
    svg.polyline(pts, s.color);
    s.points.forEach((p, i) => {
      if (Number.isFinite(p.lo) && Number.isFinite(p.hi) && (!opts.logY || p.lo > 0)) {
        svg.line(pts[i][0], yScale.toPixel(p.lo), pts[i][0], yScale.toPixel(p.hi), s.color);
      }
      svg.circle(pts[i][0], pts[i][1], 3, s.color);
    });
  }
  if (opts.crossingMarker && series.length >= 2) {
    for (let k = 0; k + 1 < series.length; k += 1) {
      const a = series[k];
      const b = series[k + 1];
      const shared = a.points
        .map((p) => p.x)
        .filter((x) => b.points.some((q) => q.x === x))
        .sort((u, v) => u - v);
      if (shared.length < 2) continue;
      const av = shared.map((x) => a.points.find((p) => p.x === x)!.y);
      const bv = shared.map((x) => b.points.find((p) => p.x === x)!.y);
      const cross = firstCrossing(shared, av, bv);
      if (cross !== null) {
        const px = xScale.toPixel(cross);
        svg.line(px, HEIGHT - MARGIN.bottom, px, MARGIN.top, '#555', 1, '5,4');
        svg.text(px, MARGIN.top + 12, `cross ${a.label}/${b.label}: ${cross.toFixed(4)}`,
          { size: 10, fill: '#555' });
      }
    }
  }
  drawLegend(svg, series.map((s) => [s.label, s.color]));
  return svg.close();
}

function summarySeries(
  rows: SummaryRow[], observable: string,
  x: (r: SummaryRow) => number, y: (r: SummaryRow) => number,
): Series[] {
  const groups = byL(pick(rows, observable));
  return [...groups.entries()].map(([L, list], i) => ({
    label: `L=${L}`,
    color: SERIES_COLORS[i % SERIES_COLORS.length],
    points: list.map((r) => {
      const scale = r.value !== 0 && Number.isFinite(r.value) ? y(r) / r.value : 1;
      return { x: x(r), y: y(r), lo: r.ci_lo * scale, hi: r.ci_hi * scale };
    }),
  }));
}

export function renderBinderVsBeta(rows: SummaryRow[], observable = 'g_q'): string {
  const obs = rows.some((r) => r.observable === observable) ? observable : 'g_m';
  const series = summarySeries(rows, obs, (r) => r.beta, (r) => r.value);
  return renderSeries(`Binder ratio ${obs} vs beta`, 'beta', obs, series,
    { crossingMarker: true });
}

export function renderChiVsBeta(rows: SummaryRow[]): string {
  const series = summarySeries(rows, 'chi_q', (r) => r.beta, (r) => r.value);
  return renderSeries('Overlap susceptibility vs beta', 'beta', 'chi_q',
    series, { logY: true });
}

export function renderCeLowT(rows: SummaryRow[]): string {
  const series = summarySeries(rows, 'c_e', (r) => r.beta, (r) => r.value);
  return renderSeries('Specific heat at low temperature', 'beta', 'c_e',
    series, { logY: true });
}

export function renderGCollapse(rows: SummaryRow[], observable = 'g_q'): string {
  const obs = rows.some((r) => r.observable === observable) ? observable : 'g_m';
  const series = summarySeries(rows, obs,
    (r) => collapseX(r.L, r.beta), (r) => r.value);
  return renderSeries(`${obs} collapse`, 'beta - ln(L)/2', obs, series);
}

export function renderChiCollapse(rows: SummaryRow[], eta: number): string {
  const series = summarySeries(rows, 'chi_q',
    (r) => collapseX(r.L, r.beta),
    (r) => collapseChi(r.L, r.value, eta));
  return renderSeries(`chi_q * L^-(2-${fmtTick(eta)}) collapse`,
    'beta - ln(L)/2', 'rescaled chi_q', series, { logY: true });
}

export function renderTauBars(rows: BenchRow[]): string {
  const Ls = [...new Set(rows.map((r) => r.L))].sort((a, b) => a - b);
  const samplers = [...new Set(rows.map((r) => r.sampler))].sort();
  const svg = new Svg();
  svg.open('Autocorrelation time and cost per effective sample');
  const panels: Array<['tau' | 'tau_t0_ms', string, number, number]> = [
    ['tau', 'tau (sweeps)', MARGIN.left, WIDTH / 2 - 20],
    ['tau_t0_ms', 'tau * t0 (ms)', WIDTH / 2 + 40, WIDTH - MARGIN.right],
  ];
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top + 10;
  for (const [key, label, px0, px1] of panels) {
    const vals = rows.map((r) => (key === 'tau' ? r.tau : r.tau_t0_ms));
    const yScale = linearScale(0, Math.max(...vals) * 1.1, y0, y1);
    svg.line(px0, y0, px1, y0, '#222');
    svg.line(px0, y0, px0, y1, '#222');
    for (const t of yScale.ticks) {
      const py = yScale.toPixel(t);
      svg.line(px0 - 4, py, px0, py, '#222');
      svg.text(px0 - 6, py + 4, fmtTick(t), { anchor: 'end', size: 10 });
    }
    const group = (px1 - px0) / Ls.length;
    const bar = group / (samplers.length + 1);
    Ls.forEach((L, gi) => {
      samplers.forEach((s, si) => {
        const row = rows.find((r) => r.L === L && r.sampler === s);
        if (!row) return;
        const v = key === 'tau' ? row.tau : row.tau_t0_ms;
        const x = px0 + gi * group + (si + 0.5) * bar;
        svg.rect(x, yScale.toPixel(v), bar * 0.9, y0 - yScale.toPixel(v),
          SERIES_COLORS[si % SERIES_COLORS.length]);
      });
      svg.text(px0 + gi * group + group / 2, y0 + 18, `L=${L}`, { size: 11 });
    });
    svg.text((px0 + px1) / 2, y1 - 6, label, { size: 12 });
  }
  drawLegend(svg, samplers.map(
    (s, i) => [s, SERIES_COLORS[i % SERIES_COLORS.length]],
  ));
  return svg.close();
}
