// Canvas drawing, kept as pure functions over a minimal 2D-context surface
// so panels can be exercised headlessly in tests.

import type { Point } from "./layout.js";
import type { ConsoleState } from "./state.js";
import { edgeKey } from "./state.js";
import type { PhaseGridPayload, ThresholdInfo } from "./types.js";

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
}

export const STATUS_COLORS: Record<string, string> = {
  viable: "#7fb069",
  ponzi: "#f4d35e",
  failed: "#d64550",
  immunized: "#4f8fc0",
};

export function drawNetwork(
  ctx: Ctx2D,
  state: ConsoleState,
  layout: Point[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.lineWidth = 1;
  for (const [u, v] of state.edges) {
    const guaranteed = state.guaranteedEdges.has(edgeKey([u, v]));
    ctx.strokeStyle = guaranteed ? "#4f8fc0" : "#cccccc";
    ctx.beginPath();
    ctx.moveTo(layout[u].x * width, layout[u].y * height);
    ctx.lineTo(layout[v].x * width, layout[v].y * height);
    ctx.stroke();
  }
  const r = Math.max(3, Math.min(9, 240 / Math.sqrt(state.nNodes + 1)));
  for (let n = 0; n < state.nNodes; n++) {
    ctx.fillStyle = STATUS_COLORS[state.statuses[n]];
    ctx.beginPath();
    ctx.arc(layout[n].x * width, layout[n].y * height, r, 0, Math.PI * 2);
    ctx.fill();
  }
}

export interface TimelineBar {
  x: number;
  y: number;
  w: number;
  h: number;
  count: number;
  tick: number;
}

/** Geometry of the failure-timeline bars; drawing and tests share it. */
export function timelineBars(
  counts: number[],
  width: number,
  height: number,
): TimelineBar[] {
  if (counts.length === 0) return [];
  const maxCount = Math.max(...counts, 1);
  const w = width / counts.length;
  return counts.map((count, tick) => {
    const h = (count / maxCount) * (height - 14);
    return { x: tick * w, y: height - h, w: Math.max(w - 1, 1), h, count, tick };
  });
}

export function drawTimeline(
  ctx: Ctx2D,
  counts: number[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#d64550";
  for (const bar of timelineBars(counts, width, height)) {
    ctx.beginPath();
    ctx.rect(bar.x, bar.y, bar.w, bar.h);
    ctx.fill();
  }
}

export function drawRateSeries(
  ctx: Ctx2D,
  rates: number[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  if (rates.length < 2) return;
  const maxRate = Math.max(...rates) * 1.05;
  const minRate = Math.min(...rates) * 0.95;
  const span = maxRate - minRate || 1;
  ctx.strokeStyle = "#2d6a4f";
  ctx.lineWidth = 2;
  ctx.beginPath();
  rates.forEach((rate, t) => {
    const x = (t / (rates.length - 1)) * width;
    const y = height - ((rate - minRate) / span) * (height - 10) - 5;
    if (t === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

/** Log-log mapping of the phase panel; marker moves with (N_failed, i). */
export function phasePanelTransform(
  th: ThresholdInfo,
  nTotal: number,
  width: number,
  height: number,
): (n: number, i: number) => { x: number; y: number } {
  const nLo = Math.log(1);
  const nHi = Math.log(Math.max(nTotal, 10));
  const iLo = Math.log(th.i_safe / 20);
  const iHi = Math.log(th.i_0c * 20);
  return (n, i) => ({
    x: ((Math.log(Math.max(n, 1)) - nLo) / (nHi - nLo)) * width,
    y: height - ((Math.log(i) - iLo) / (iHi - iLo)) * height,
  });
}

export const PHASE_COLORS: Record<string, string> = {
  micro_crisis: "#c9b1e0",
  stable: "#bfe3c0",
  minsky_instability: "#f2c0a0",
  solid_core: "#f1f1f1",
};

export interface PhaseCell {
  x: number;
  y: number;
  w: number;
  h: number;
  label: string;
}

/** Raster cells for the pre-rendered phase map (log-spaced grid assumed). */
export function phaseCells(
  grid: PhaseGridPayload,
  width: number,
  height: number,
): PhaseCell[] {
  if (!grid.available || !grid.labels || !grid.n0_values || !grid.axis_values) {
    return [];
  }
  const nCols = grid.n0_values.length;
  const nRows = grid.axis_values.length;
  const w = width / nCols;
  const h = height / nRows;
  const cells: PhaseCell[] = [];
  grid.labels.forEach((row, r) => {
    row.forEach((label, c) => {
      // rows are ordered by ascending i0; the panel puts low rates at the bottom
      cells.push({ x: c * w, y: height - (r + 1) * h, w, h, label });
    });
  });
  return cells;
}

/** Marker position inside the grid's own log-log frame. */
export function gridMarkerTransform(
  grid: PhaseGridPayload,
  width: number,
  height: number,
): ((n: number, i: number) => { x: number; y: number }) | null {
  if (!grid.available || !grid.n0_values || !grid.axis_values) return null;
  const n0 = grid.n0_values;
  const iv = grid.axis_values;
  const nLo = Math.log(n0[0]);
  const nHi = Math.log(n0[n0.length - 1]);
  const iLo = Math.log(iv[0]);
  const iHi = Math.log(iv[iv.length - 1]);
  return (n, i) => ({
    x: ((Math.log(Math.max(n, n0[0])) - nLo) / (nHi - nLo)) * width,
    y: height - ((Math.log(i) - iLo) / (iHi - iLo)) * height,
  });
}

export function drawPhasePanel(
  ctx: Ctx2D,
  state: ConsoleState,
  nTotal: number,
  width: number,
  height: number,
  grid: PhaseGridPayload | null = null,
): void {
  ctx.clearRect(0, 0, width, height);
  if (grid && grid.available) {
    for (const cell of phaseCells(grid, width, height)) {
      ctx.fillStyle = PHASE_COLORS[cell.label] ?? "#ffffff";
      ctx.beginPath();
      ctx.rect(cell.x, cell.y, cell.w + 0.5, cell.h + 0.5);
      ctx.fill();
    }
    const tr = gridMarkerTransform(grid, width, height)!;
    const marker = state.phaseMarker();
    const { x, y } = tr(marker.n, marker.i);
    ctx.fillStyle = "#222222";
    ctx.beginPath();
    ctx.arc(x, y, 5, 0, Math.PI * 2);
    ctx.fill();
    return;
  }
  const th = state.thresholds;
  if (!th) {
    ctx.fillStyle = "#666666";
    ctx.font = "12px sans-serif";
    ctx.fillText("no mean-field thresholds for this scenario", 10, 20);
    return;
  }
  const tr = phasePanelTransform(th, nTotal, width, height);
  for (const [value, color] of [
    [th.i_safe, "#4f8fc0"],
    [th.i_0c, "#d64550"],
  ] as [number, string][]) {
    const y = tr(1, value).y;
    ctx.strokeStyle = color;
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(width, y);
    ctx.stroke();
  }
  for (const bound of [th.n_conv, th.n_div, th.n_core]) {
    if (bound === null) continue;
    const x = tr(bound, th.i_safe).x;
    ctx.strokeStyle = "#999999";
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
  }
  const marker = state.phaseMarker();
  const { x, y } = tr(marker.n, marker.i);
  ctx.fillStyle = "#222222";
  ctx.beginPath();
  ctx.arc(x, y, 5, 0, Math.PI * 2);
  ctx.fill();
}
