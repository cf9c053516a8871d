/** Minimal deterministic SVG builder: fixed canvas, fixed number
 * formatting, no timestamps or generated ids, so identical inputs give
 * byte-identical files. */

export const WIDTH = 640;
export const HEIGHT = 440;
export const MARGIN = { left: 70, right: 20, top: 40, bottom: 55 };

export const SERIES_COLORS = [
  '#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b',
];

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return '0';
  const s = v.toFixed(2);
  return s === '-0.00' ? '0.00' : s;
}

export function fmtTick(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(0);
  }
  return String(Number(v.toPrecision(6)));
}

export class Svg {
  private parts: string[] = [];

  open(title: string): void {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${escapeXml(title)}</text>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ''): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : '';
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke: string, width = 1.5): void {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(' ');
    this.parts.push(
      `<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, s: string, opts: { anchor?: string; size?: number; fill?: string; rotate?: boolean } = {}): void {
    const anchor = opts.anchor ?? 'middle';
    const size = opts.size ?? 12;
    const fill = opts.fill ?? '#222';
    const tr = opts.rotate ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : '';
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-size="${size}" fill="${fill}"${tr}>${escapeXml(s)}</text>`,
    );
  }

  close(): string {
    return `${this.parts.join('\n')}\n</svg>\n`;
  }
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
