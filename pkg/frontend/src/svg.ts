/**
 * Minimal deterministic SVG chart scaffolding: fixed canvas, linear scales,
 * axes with tick labels, polylines and a legend.  No timestamps, no random
 * ids -- the same inputs always produce the same bytes.
 */

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { top: 30, right: 20, bottom: 50, left: 70 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

/** Fixed-precision coordinate formatting keeps the output byte-stable. */
const fmt = (v: number): string => v.toFixed(2);

export function polyline(
  xs: number[],
  ys: number[],
  stroke: string,
  dashed = false,
): string {
  const points = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(' ');
  const dash = dashed ? ' stroke-dasharray="6,4"' : '';
  return `<polyline fill="none" stroke="${stroke}" stroke-width="1.5"${dash} points="${points}"/>`;
}

export function circle(x: number, y: number, fill: string, r = 3): string {
  return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`;
}

export function text(
  x: number,
  y: number,
  content: string,
  anchor: 'start' | 'middle' | 'end' = 'middle',
  size = 12,
): string {
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" ` +
    `font-family="sans-serif" font-size="${size}">${escapeXml(content)}</text>`
  );
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;');
}

export function ticks(domain: [number, number], count = 6): number[] {
  const [lo, hi] = domain;
  const step = (hi - lo) / (count - 1);
  return Array.from({ length: count }, (_, i) => lo + i * step);
}

export interface AxisLabels {
  x: string;
  y: string;
  /** Formats a tick value into its label, e.g. 10^k for log axes. */
  xTick?: (v: number) => string;
  yTick?: (v: number) => string;
}

export function axes(xScale: Scale, yScale: Scale, labels: AxisLabels): string {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const xTick = labels.xTick ?? ((v: number) => trimNumber(v));
  const yTick = labels.yTick ?? ((v: number) => trimNumber(v));
  const parts = [
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
  ];
  for (const v of ticks(xScale.domain)) {
    const x = xScale(v);
    parts.push(`<line x1="${fmt(x)}" y1="${y0}" x2="${fmt(x)}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(text(x, y0 + 20, xTick(v)));
  }
  for (const v of ticks(yScale.domain)) {
    const y = yScale(v);
    parts.push(`<line x1="${x0 - 5}" y1="${fmt(y)}" x2="${x0}" y2="${fmt(y)}" stroke="black"/>`);
    parts.push(text(x0 - 10, y + 4, yTick(v), 'end'));
  }
  parts.push(text((x0 + x1) / 2, HEIGHT - 10, labels.x));
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-family="sans-serif" ` +
      `font-size="12" transform="rotate(-90 18 ${(y0 + y1) / 2})">${labels.y}</text>`,
  );
  return parts.join('\n');
}

function trimNumber(v: number): string {
  const s = v.toPrecision(3);
  return String(Number(s));
}

export interface LegendEntry {
  label: string;
  stroke: string;
  dashed?: boolean;
}

export function legend(entries: LegendEntry[]): string {
  const x = WIDTH - MARGIN.right - 170;
  const parts: string[] = [];
  entries.forEach((entry, i) => {
    const y = MARGIN.top + 16 + i * 18;
    const dash = entry.dashed ? ' stroke-dasharray="6,4"' : '';
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 30}" y2="${y}" stroke="${entry.stroke}" ` +
        `stroke-width="1.5"${dash}/>`,
    );
    parts.push(text(x + 38, y + 4, entry.label, 'start'));
  });
  return parts.join('\n');
}

export function document(title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    text(WIDTH / 2, 20, title, 'middle', 14),
    body,
    '</svg>',
    '',
  ].join('\n');
}
