/** Figure intermediate representation. Builders emit a Scene; svg.ts and
 * raster.ts turn the same scene into the two output files, so the pair can
 * never drift apart. Coordinates are pixels, y growing downward. */

import { formatTick, Scale } from "./scale.js";

export interface Polyline {
  kind: "polyline";
  points: number[]; // x0,y0,x1,y1,...
  color: string;
  width: number;
  cls?: string;
}

export interface Rect {
  kind: "rect";
  x: number;
  y: number;
  w: number;
  h: number;
  fill?: string;
  stroke?: string;
  cls?: string;
}

export interface TextItem {
  kind: "text";
  x: number;
  y: number; // baseline
  text: string;
  color: string;
  size: number;
  anchor: "start" | "middle" | "end";
  cls?: string;
}

/** A cols-by-rows cell image stretched over a pixel box (heatmaps). */
export interface CellImage {
  kind: "cells";
  x: number;
  y: number;
  w: number;
  h: number;
  cols: number;
  rows: number;
  rgb: Uint8Array; // 3 bytes per cell, row-major, top row first
}

export type SceneItem = Polyline | Rect | TextItem | CellImage;

export interface Scene {
  width: number;
  height: number;
  items: SceneItem[];
}

export function makeScene(width: number, height: number): Scene {
  return { width, height, items: [] };
}

export const COLORS = [
  "#2166ac",
  "#b2182b",
  "#1b7837",
  "#8c510a",
  "#762a83",
  "#35978f",
];

export const CLASSICAL_COLOR = "#999999";
export const FRAME_COLOR = "#333333";
export const GRID_COLOR = "#dddddd";

export function seriesColor(i: number): string {
  return COLORS[i % COLORS.length] as string;
}

/** One framed plot area with data scales attached. */
export interface Frame {
  x0: number;
  y0: number;
  w: number;
  h: number;
  xs: Scale;
  ys: Scale;
}

/** Ticks, grid lines, frame box and axis labels for a frame. */
export function drawAxes(
  scene: Scene,
  frame: Frame,
  xlabel: string,
  ylabel: string,
  opts: { tickSize?: number; grid?: boolean } = {},
): void {
  const { x0, y0, w, h, xs, ys } = frame;
  const tick = opts.tickSize ?? 4;
  const grid = opts.grid ?? true;

  for (const v of xs.ticks()) {
    const px = xs(v);
    if (px < x0 - 0.5 || px > x0 + w + 0.5) continue;
    if (grid) {
      scene.items.push({
        kind: "polyline",
        points: [px, y0, px, y0 + h],
        color: GRID_COLOR,
        width: 1,
      });
    }
    scene.items.push({
      kind: "polyline",
      points: [px, y0 + h, px, y0 + h + tick],
      color: FRAME_COLOR,
      width: 1,
    });
    scene.items.push({
      kind: "text",
      x: px,
      y: y0 + h + tick + 11,
      text: formatTick(v),
      color: FRAME_COLOR,
      size: 10,
      anchor: "middle",
    });
  }
  for (const v of ys.ticks()) {
    const py = ys(v);
    if (py < y0 - 0.5 || py > y0 + h + 0.5) continue;
    if (grid) {
      scene.items.push({
        kind: "polyline",
        points: [x0, py, x0 + w, py],
        color: GRID_COLOR,
        width: 1,
      });
    }
    scene.items.push({
      kind: "polyline",
      points: [x0 - tick, py, x0, py],
      color: FRAME_COLOR,
      width: 1,
    });
    scene.items.push({
      kind: "text",
      x: x0 - tick - 3,
      y: py + 3,
      text: formatTick(v),
      color: FRAME_COLOR,
      size: 10,
      anchor: "end",
    });
  }

  scene.items.push({
    kind: "rect",
    x: x0,
    y: y0,
    w,
    h,
    stroke: FRAME_COLOR,
    cls: "panel-frame",
  });
  if (xlabel) {
    scene.items.push({
      kind: "text",
      x: x0 + w / 2,
      y: y0 + h + 30,
      text: xlabel,
      color: FRAME_COLOR,
      size: 11,
      anchor: "middle",
    });
  }
  if (ylabel) {
    // no rotated text in the raster path, so the y label sits above the axis
    scene.items.push({
      kind: "text",
      x: x0,
      y: y0 - 8,
      text: ylabel,
      color: FRAME_COLOR,
      size: 11,
      anchor: "start",
    });
  }
}

/** Clip a polyline in data space to the frame box, splitting into pieces.
 * Segments are dropped whole when either end leaves the box; paths sampled
 * finely enough for plotting lose at most one cell at the rim. */
export function clippedPolyline(
  frame: Frame,
  px: ArrayLike<number>,
  py: ArrayLike<number>,
  color: string,
  width: number,
  cls?: string,
): Polyline[] {
  const { x0, y0, w, h } = frame;
  const inBox = (x: number, y: number) =>
    x >= x0 - 0.5 && x <= x0 + w + 0.5 && y >= y0 - 0.5 && y <= y0 + h + 0.5;
  const out: Polyline[] = [];
  let run: number[] = [];
  for (let i = 0; i < px.length; i++) {
    const x = frame.xs(px[i] as number);
    const y = frame.ys(py[i] as number);
    if (inBox(x, y)) {
      run.push(x, y);
    } else if (run.length > 0) {
      if (run.length >= 4) out.push({ kind: "polyline", points: run, color, width, cls });
      run = [];
    }
  }
  if (run.length >= 4) out.push({ kind: "polyline", points: run, color, width, cls });
  return out;
}
