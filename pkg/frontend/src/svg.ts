/** Minimal hand-rolled SVG plotting: scales, axes, gap-aware polylines. */

export interface Scale {
  toPx(value: number): number;
  ticks(count: number): number[];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (!(isFinite(d0) && isFinite(d1))) {
    d0 = 0;
    d1 = 1;
  }
  if (d0 === d1) {
    // degenerate domain (single-point traces): pad so the point is centered
    d0 -= 1;
    d1 += 1;
  }
  const [r0, r1] = range;
  const slope = (r1 - r0) / (d1 - d0);
  return {
    toPx: (v) => r0 + (v - d0) * slope,
    ticks: (count) => niceTicks(d0, d1, count),
  };
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (!(d0 > 0) || !isFinite(d0)) d0 = 1e-12;
  if (!(d1 > d0) || !isFinite(d1)) d1 = d0 * 10;
  const inner = linearScale([Math.log10(d0), Math.log10(d1)], range);
  return {
    toPx: (v) => inner.toPx(Math.log10(Math.max(v, Number.MIN_VALUE))),
    ticks: (count) => {
      const lo = Math.ceil(Math.log10(d0));
      const hi = Math.floor(Math.log10(d1));
      const decades: number[] = [];
      const stride = Math.max(1, Math.ceil((hi - lo + 1) / count));
      for (let e = lo; e <= hi; e += stride) decades.push(10 ** e);
      return decades.length > 0 ? decades : [d0, d1];
    },
  };
}

function niceTicks(lo: number, hi: number, count: number): number[] {
  const span = hi - lo;
  const rawStep = span / Math.max(count, 1);
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  const norm = rawStep / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) ticks.push(v);
  return ticks;
}

export function fmt(value: number): string {
  if (!isFinite(value)) return "0";
  return Number(value.toPrecision(10)).toString();
}

/** Polyline path split at NaN values: gaps are rendered, never bridged. */
export function gapPath(xs: number[], ys: number[]): string {
  const parts: string[] = [];
  let pen = false;
  for (let i = 0; i < xs.length; i++) {
    if (!isFinite(xs[i]) || !isFinite(ys[i])) {
      pen = false;
      continue;
    }
    parts.push(`${pen ? "L" : "M"}${fmt(xs[i])},${fmt(ys[i])}`);
    pen = true;
  }
  return parts.join(" ");
}

export interface SvgBuilder {
  add(element: string): void;
  toString(): string;
}

export function svgDocument(width: number, height: number): SvgBuilder {
  const body: string[] = [];
  return {
    add: (element) => body.push(element),
    toString: () =>
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">\n` +
      `<rect width="${width}" height="${height}" fill="white"/>\n` +
      body.join("\n") +
      "\n</svg>\n",
  };
}

export interface Frame {
  x: Scale;
  y: Scale;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export function makeFrame(
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  yLog = false,
): Frame {
  const left = 56;
  const right = width - 16;
  const top = 18;
  const bottom = height - 36;
  const x = linearScale(xDomain, [left, right]);
  const y = (yLog ? logScale : linearScale)(yDomain, [bottom, top]);
  return { x, y, left, right, top, bottom };
}

export function drawAxes(
  svg: SvgBuilder,
  frame: Frame,
  xLabel: string,
  yLabel: string,
  yTickFormat: (v: number) => string = fmt,
): void {
  const { x, y, left, right, top, bottom } = frame;
  svg.add(`<rect x="${left}" y="${top}" width="${right - left}" height="${bottom - top}" fill="none" stroke="#444"/>`);
  for (const tick of x.ticks(8)) {
    const px = x.toPx(tick);
    svg.add(`<line x1="${fmt(px)}" y1="${bottom}" x2="${fmt(px)}" y2="${bottom + 4}" stroke="#444"/>`);
    svg.add(`<text x="${fmt(px)}" y="${bottom + 16}" text-anchor="middle">${fmt(tick)}</text>`);
  }
  for (const tick of y.ticks(6)) {
    const py = y.toPx(tick);
    svg.add(`<line x1="${left - 4}" y1="${fmt(py)}" x2="${left}" y2="${fmt(py)}" stroke="#444"/>`);
    svg.add(`<text x="${left - 6}" y="${fmt(py + 3)}" text-anchor="end">${yTickFormat(tick)}</text>`);
  }
  const midX = (left + right) / 2;
  svg.add(`<text x="${fmt(midX)}" y="${bottom + 30}" text-anchor="middle">${xLabel}</text>`);
  svg.add(`<text x="14" y="${fmt((top + bottom) / 2)}" text-anchor="middle" transform="rotate(-90 14 ${fmt((top + bottom) / 2)})">${yLabel}</text>`);
}

export function finiteExtent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  return [lo, hi];
}
