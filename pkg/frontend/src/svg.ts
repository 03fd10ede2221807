/** Minimal deterministic SVG scaffolding: scales, axes, paths. */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const defaultFrame: Frame = {
  width: 640,
  height: 420,
  margin: { top: 24, right: 16, bottom: 48, left: 64 },
};

export type Scale = (v: number) => number;

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const lin = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  return (v) => lin(Math.log10(v));
}

export function extent(values: number[], pad = 0.05): [number, number] {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - pad * span, hi + pad * span];
}

const fmt = (x: number) => {
  const r = Number(x.toFixed(3));
  return Object.is(r, -0) ? "0" : String(r);
};

export function pathFrom(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)},${fmt(y)}`)
    .join(" ");
}

export function polyline(
  points: Array<[number, number]>,
  stroke: string,
  opts: { dash?: string; width?: number } = {},
): string {
  const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
  const width = opts.width ?? 1.5;
  return `<path d="${pathFrom(points)}" fill="none" stroke="${stroke}" stroke-width="${width}"${dash}/>`;
}

export function circle(x: number, y: number, r: number, fill: string): string {
  return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`;
}

export function text(
  x: number,
  y: number,
  label: string,
  opts: { anchor?: string; size?: number } = {},
): string {
  const anchor = opts.anchor ?? "start";
  const size = opts.size ?? 12;
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" font-size="${size}" text-anchor="${anchor}">${label}</text>`;
}

export function xTicks(
  frame: Frame,
  scale: Scale,
  values: number[],
  format: (v: number) => string,
): string {
  const y = frame.height - frame.margin.bottom;
  return values
    .map(
      (v) =>
        `<line x1="${fmt(scale(v))}" y1="${y}" x2="${fmt(scale(v))}" y2="${y + 5}" stroke="black"/>` +
        text(scale(v), y + 18, format(v), { anchor: "middle" }),
    )
    .join("\n");
}

export function yTicks(
  frame: Frame,
  scale: Scale,
  values: number[],
  format: (v: number) => string,
): string {
  const x = frame.margin.left;
  return values
    .map(
      (v) =>
        `<line x1="${x - 5}" y1="${fmt(scale(v))}" x2="${x}" y2="${fmt(scale(v))}" stroke="black"/>` +
        text(x - 8, scale(v) + 4, format(v), { anchor: "end" }),
    )
    .join("\n");
}

export function axes(frame: Frame): string {
  const { width, height, margin } = frame;
  const x0 = margin.left;
  const y0 = height - margin.bottom;
  return (
    `<line x1="${x0}" y1="${margin.top}" x2="${x0}" y2="${y0}" stroke="black"/>` +
    `<line x1="${x0}" y1="${y0}" x2="${width - margin.right}" y2="${y0}" stroke="black"/>`
  );
}

export function document(frame: Frame, body: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">\n` +
    `<rect width="${frame.width}" height="${frame.height}" fill="white"/>\n` +
    body.join("\n") +
    "\n</svg>\n"
  );
}
