/**
 * The three standard figures rendered from a simulation trace:
 *
 *  - trajectory: phase-plane curves of the state and its estimate, with
 *    point markers where the supervisor switched modes;
 *  - norms: squared state norm and squared estimation-error norm over time,
 *    with vertical switch markers;
 *  - gramian: the monitored smallest window-Gramian eigenvalue on a log
 *    axis, overlaid with the mode square signal (high during observation,
 *    low during stabilization) whose corners sit exactly on the logged
 *    switch times.
 */

import { readSwitches, readTrace, realizedSwitches, SwitchEvent, Trace } from "./csv.js";
import { drawAxes, finiteExtent, fmt, gapPath, makeFrame, svgDocument } from "./svg.js";

export type FigureKind = "trajectory" | "norms" | "gramian";

export interface FigureSpec {
  figure: FigureKind;
  tracePath: string;
  switchesPath: string;
  outPath?: string;
  gMin?: number;
  width?: number;
  height?: number;
}

const WIDTH = 760;
const HEIGHT = 420;

function col(trace: Trace, name: string): number[] {
  const values = trace.columns.get(name);
  if (values === undefined) {
    throw new Error(`trace schema mismatch: missing columns ${name}`);
  }
  return values;
}

function nearestIndex(ts: number[], t: number): number {
  let best = 0;
  let dist = Infinity;
  for (let i = 0; i < ts.length; i++) {
    const d = Math.abs(ts[i] - t);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return best;
}

export function renderTrajectory(trace: Trace, switches: SwitchEvent[], width = WIDTH, height = HEIGHT): string {
  const x1 = col(trace, "x_1");
  const x2 = col(trace, "x_2");
  const xh1 = col(trace, "xhat_1");
  const xh2 = col(trace, "xhat_2");
  const t = col(trace, "t");
  const [xLo, xHi] = finiteExtent([...x1, ...xh1]);
  const [yLo, yHi] = finiteExtent([...x2, ...xh2]);
  const padX = 0.05 * (xHi - xLo || 1);
  const padY = 0.05 * (yHi - yLo || 1);
  const frame = makeFrame(width, height, [xLo - padX, xHi + padX], [yLo - padY, yHi + padY]);
  const svg = svgDocument(width, height);
  drawAxes(svg, frame, "x_1", "x_2");
  const px = (v: number[]) => v.map((q) => frame.x.toPx(q));
  const py = (v: number[]) => v.map((q) => frame.y.toPx(q));
  svg.add(`<path d="${gapPath(px(x1), py(x2))}" fill="none" stroke="#1f77b4" stroke-width="1.4"/>`);
  svg.add(`<path d="${gapPath(px(xh1), py(xh2))}" fill="none" stroke="#d62728" stroke-width="1.2" stroke-dasharray="5,3"/>`);
  if (t.length === 1) {
    svg.add(`<circle cx="${fmt(frame.x.toPx(x1[0]))}" cy="${fmt(frame.y.toPx(x2[0]))}" r="3" fill="#1f77b4"/>`);
    svg.add(`<circle cx="${fmt(frame.x.toPx(xh1[0]))}" cy="${fmt(frame.y.toPx(xh2[0]))}" r="3" fill="#d62728"/>`);
  }
  for (const ev of realizedSwitches(switches)) {
    const i = nearestIndex(t, ev.time);
    svg.add(`<circle class="switch-marker" data-time="${fmt(ev.time)}" cx="${fmt(frame.x.toPx(x1[i]))}" cy="${fmt(frame.y.toPx(x2[i]))}" r="3.5" fill="none" stroke="#1f77b4" stroke-width="1.3"/>`);
    svg.add(`<circle class="switch-marker" data-time="${fmt(ev.time)}" cx="${fmt(frame.x.toPx(xh1[i]))}" cy="${fmt(frame.y.toPx(xh2[i]))}" r="3.5" fill="none" stroke="#d62728" stroke-width="1.3"/>`);
  }
  svg.add(`<text x="${width - 180}" y="26" fill="#1f77b4">state</text>`);
  svg.add(`<text x="${width - 120}" y="26" fill="#d62728">estimate</text>`);
  return svg.toString();
}

export function renderNorms(trace: Trace, switches: SwitchEvent[], width = WIDTH, height = HEIGHT): string {
  const t = col(trace, "t");
  const xNormSq = col(trace, "x_norm_sq");
  const epsSq = col(trace, "eps_norm").map((v) => v * v);
  const frame = makeFrame(width, height, finiteExtent(t), finiteExtent([...xNormSq, ...epsSq]));
  const svg = svgDocument(width, height);
  drawAxes(svg, frame, "t", "squared norms");
  for (const ev of realizedSwitches(switches)) {
    const px = frame.x.toPx(ev.time);
    svg.add(`<line class="switch-line" data-time="${fmt(ev.time)}" x1="${fmt(px)}" y1="${frame.top}" x2="${fmt(px)}" y2="${frame.bottom}" stroke="#bbbbbb" stroke-dasharray="3,3"/>`);
  }
  const px = t.map((q) => frame.x.toPx(q));
  svg.add(`<path d="${gapPath(px, xNormSq.map((q) => frame.y.toPx(q)))}" fill="none" stroke="#1f77b4" stroke-width="1.4"/>`);
  svg.add(`<path d="${gapPath(px, epsSq.map((q) => frame.y.toPx(q)))}" fill="none" stroke="#d62728" stroke-width="1.4"/>`);
  svg.add(`<text x="${width - 200}" y="26" fill="#1f77b4">|x|^2</text>`);
  svg.add(`<text x="${width - 130}" y="26" fill="#d62728">|error|^2</text>`);
  return svg.toString();
}

export function renderGramian(
  trace: Trace,
  switches: SwitchEvent[],
  gMin?: number,
  width = WIDTH,
  height = HEIGHT,
): string {
  const t = col(trace, "t");
  const g = col(trace, "g");
  const finite = g.filter((v) => isFinite(v) && v > 0);
  let [gLo, gHi] = finiteExtent(finite);
  if (gMin !== undefined) gLo = Math.min(gLo, gMin);
  const frame = makeFrame(width, height, finiteExtent(t), [gLo, gHi], true);
  const svg = svgDocument(width, height);
  drawAxes(svg, frame, "t", "smallest window-Gramian eigenvalue", (v) => v.toExponential(0));

  // eigenvalue curve; the startup gap (empty g cells) stays a gap
  const px = t.map((q) => frame.x.toPx(q));
  svg.add(`<path d="${gapPath(px, g.map((q) => frame.y.toPx(q)))}" fill="none" stroke="#1f77b4" stroke-width="1.4"/>`);
  if (gMin !== undefined) {
    const py = frame.y.toPx(gMin);
    svg.add(`<line x1="${frame.left}" y1="${fmt(py)}" x2="${frame.right}" y2="${fmt(py)}" stroke="#d62728" stroke-dasharray="6,3"/>`);
    svg.add(`<text x="${frame.right - 4}" y="${fmt(py - 4)}" text-anchor="end" fill="#d62728">threshold</text>`);
  }

  // mode square signal: high while observing, low while stabilizing; the
  // corners are the logged switch times themselves, not trace samples
  const realized = realizedSwitches(switches);
  const tEnd = t.length > 0 ? t[t.length - 1] : 0;
  const yHigh = frame.top + 12;
  const yLow = frame.bottom - 12;
  let mode: "observation" | "stabilization" = "observation";
  let tPrev = t.length > 0 ? t[0] : 0;
  const pts: string[] = [];
  const level = () => (mode === "observation" ? yHigh : yLow);
  pts.push(`${fmt(frame.x.toPx(tPrev))},${fmt(level())}`);
  for (const ev of realized) {
    pts.push(`${fmt(frame.x.toPx(ev.time))},${fmt(level())}`);
    mode = ev.newMode === "observation" ? "observation" : "stabilization";
    pts.push(`${fmt(frame.x.toPx(ev.time))},${fmt(level())}`);
  }
  pts.push(`${fmt(frame.x.toPx(tEnd))},${fmt(level())}`);
  const transitions = realized.map((ev) => fmt(ev.time)).join(",");
  svg.add(`<polyline class="mode-signal" data-transitions="${transitions}" points="${pts.join(" ")}" fill="none" stroke="#333333" stroke-width="1.8"/>`);
  svg.add(`<text x="${frame.left + 8}" y="${yHigh - 4}">observation</text>`);
  svg.add(`<text x="${frame.left + 8}" y="${yLow + 14}">stabilization</text>`);
  return svg.toString();
}

const TRACE_REQUIREMENTS: Record<FigureKind, string[]> = {
  trajectory: ["t", "x_1", "x_2", "xhat_1", "xhat_2"],
  norms: ["t", "x_norm_sq", "eps_norm"],
  gramian: ["t", "g"],
};

export function renderFigure(spec: FigureSpec): string {
  const trace = readTrace(spec.tracePath, TRACE_REQUIREMENTS[spec.figure]);
  const switches = readSwitches(spec.switchesPath);
  const width = spec.width ?? WIDTH;
  const height = spec.height ?? HEIGHT;
  switch (spec.figure) {
    case "trajectory":
      return renderTrajectory(trace, switches, width, height);
    case "norms":
      return renderNorms(trace, switches, width, height);
    case "gramian":
      return renderGramian(trace, switches, spec.gMin, width, height);
  }
}
