/** Software rasterizer for scenes: RGB buffer, Bresenham lines, filled
 * rectangles, nearest-neighbour cell images and a 5x7 bitmap font. Text is
 * lowercased before lookup; glyphs outside the table render as a hollow box.
 * No antialiasing, so output bytes are exactly reproducible. */

import { encodePng } from "./png.js";
import { Scene, SceneItem } from "./scene.js";

// 7 rows of 5 bits per glyph, bit 4 = left column
const FONT: Record<string, number[]> = {
  "0": [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  "1": [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  "2": [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  "3": [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  "4": [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  "5": [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  "6": [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  "7": [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  "8": [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  "9": [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  a: [0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f],
  b: [0x10, 0x10, 0x1e, 0x11, 0x11, 0x11, 0x1e],
  c: [0x00, 0x00, 0x0e, 0x11, 0x10, 0x11, 0x0e],
  d: [0x01, 0x01, 0x0f, 0x11, 0x11, 0x11, 0x0f],
  e: [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
  f: [0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08],
  g: [0x00, 0x00, 0x0f, 0x11, 0x0f, 0x01, 0x0e],
  h: [0x10, 0x10, 0x1e, 0x11, 0x11, 0x11, 0x11],
  i: [0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e],
  j: [0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c],
  k: [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
  l: [0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  m: [0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15],
  n: [0x00, 0x00, 0x1e, 0x11, 0x11, 0x11, 0x11],
  o: [0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e],
  p: [0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10],
  q: [0x00, 0x00, 0x0f, 0x11, 0x0f, 0x01, 0x01],
  r: [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
  s: [0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e],
  t: [0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06],
  u: [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d],
  v: [0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04],
  w: [0x00, 0x00, 0x11, 0x15, 0x15, 0x15, 0x0a],
  x: [0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11],
  y: [0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e],
  z: [0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f],
  " ": [0, 0, 0, 0, 0, 0, 0],
  ".": [0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c],
  ",": [0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x08],
  "-": [0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00],
  "+": [0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00],
  "/": [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
  "=": [0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00],
  ":": [0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00],
  "(": [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
  ")": [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
};
const UNKNOWN = [0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f];
const GLYPH_W = 6; // 5 pixels + 1 gap
const GLYPH_H = 7;

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly rgb: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.rgb = new Uint8Array(3 * width * height).fill(255);
  }

  set(x: number, y: number, c: [number, number, number]): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = 3 * (y * this.width + x);
    this.rgb[i] = c[0];
    this.rgb[i + 1] = c[1];
    this.rgb[i + 2] = c[2];
  }

  line(
    x0: number,
    y0: number,
    x1: number,
    y1: number,
    c: [number, number, number],
    width = 1,
  ): void {
    let ax = Math.round(x0);
    let ay = Math.round(y0);
    const bx = Math.round(x1);
    const by = Math.round(y1);
    const dx = Math.abs(bx - ax);
    const dy = -Math.abs(by - ay);
    const sx = ax < bx ? 1 : -1;
    const sy = ay < by ? 1 : -1;
    let err = dx + dy;
    const steep = dy < -dx; // mostly vertical: thicken sideways
    for (;;) {
      this.set(ax, ay, c);
      for (let k = 1; k < width; k++) {
        if (steep) this.set(ax + k, ay, c);
        else this.set(ax, ay + k, c);
      }
      if (ax === bx && ay === by) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
    }
  }

  fillRect(
    x: number,
    y: number,
    w: number,
    h: number,
    c: [number, number, number],
  ): void {
    const x1 = Math.round(x + w);
    const y1 = Math.round(y + h);
    for (let py = Math.round(y); py < y1; py++) {
      for (let px = Math.round(x); px < x1; px++) {
        this.set(px, py, c);
      }
    }
  }

  strokeRect(
    x: number,
    y: number,
    w: number,
    h: number,
    c: [number, number, number],
  ): void {
    this.line(x, y, x + w, y, c);
    this.line(x + w, y, x + w, y + h, c);
    this.line(x + w, y + h, x, y + h, c);
    this.line(x, y + h, x, y, c);
  }

  text(
    x: number,
    y: number, // baseline, as in SVG
    s: string,
    c: [number, number, number],
    size: number,
    anchor: "start" | "middle" | "end",
  ): void {
    const k = Math.max(1, Math.round(size / 9));
    const text = s.toLowerCase();
    const w = text.length * GLYPH_W * k;
    let ox = Math.round(x);
    if (anchor === "middle") ox -= Math.round(w / 2);
    if (anchor === "end") ox -= w;
    const oy = Math.round(y) - GLYPH_H * k + k; // baseline sits one row up
    for (const ch of text) {
      const rows = FONT[ch] ?? UNKNOWN;
      for (let r = 0; r < GLYPH_H; r++) {
        const bits = rows[r] as number;
        for (let b = 0; b < 5; b++) {
          if ((bits >> (4 - b)) & 1) {
            this.fillRect(ox + b * k, oy + r * k, k, k, c);
          }
        }
      }
      ox += GLYPH_W * k;
    }
  }

  /** Stretch a cols-by-rows cell image over a pixel box. */
  cells(
    x: number,
    y: number,
    w: number,
    h: number,
    cols: number,
    rows: number,
    rgb: Uint8Array,
  ): void {
    const px0 = Math.round(x);
    const py0 = Math.round(y);
    const px1 = Math.round(x + w);
    const py1 = Math.round(y + h);
    for (let py = py0; py < py1; py++) {
      const r = Math.min(rows - 1, Math.floor(((py - py0) / (py1 - py0)) * rows));
      for (let px = px0; px < px1; px++) {
        const ccol = Math.min(
          cols - 1,
          Math.floor(((px - px0) / (px1 - px0)) * cols),
        );
        const i = 3 * (r * cols + ccol);
        this.set(px, py, [
          rgb[i] as number,
          rgb[i + 1] as number,
          rgb[i + 2] as number,
        ]);
      }
    }
  }
}

export function parseColor(hex: string): [number, number, number] {
  const m = /^#([0-9a-fA-F]{6})$/.exec(hex);
  if (!m) throw new Error(`not a #rrggbb color: ${hex}`);
  const v = parseInt(m[1] as string, 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

function drawItem(canvas: Canvas, it: SceneItem): void {
  switch (it.kind) {
    case "polyline": {
      const c = parseColor(it.color);
      for (let i = 0; i + 3 < it.points.length; i += 2) {
        canvas.line(
          it.points[i] as number,
          it.points[i + 1] as number,
          it.points[i + 2] as number,
          it.points[i + 3] as number,
          c,
          Math.round(it.width),
        );
      }
      break;
    }
    case "rect":
      if (it.fill) canvas.fillRect(it.x, it.y, it.w, it.h, parseColor(it.fill));
      if (it.stroke) canvas.strokeRect(it.x, it.y, it.w, it.h, parseColor(it.stroke));
      break;
    case "text":
      canvas.text(it.x, it.y, it.text, parseColor(it.color), it.size, it.anchor);
      break;
    case "cells":
      canvas.cells(it.x, it.y, it.w, it.h, it.cols, it.rows, it.rgb);
      break;
  }
}

export function sceneToPng(scene: Scene): Buffer {
  const canvas = new Canvas(scene.width, scene.height);
  for (const it of scene.items) drawItem(canvas, it);
  return encodePng(scene.width, scene.height, canvas.rgb);
}
