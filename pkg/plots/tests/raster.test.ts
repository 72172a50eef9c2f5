import { describe, expect, it } from "vitest";

import { Canvas, parseColor } from "../src/raster.js";

function pixel(c: Canvas, x: number, y: number): [number, number, number] {
  const i = 3 * (y * c.width + x);
  return [c.rgb[i] as number, c.rgb[i + 1] as number, c.rgb[i + 2] as number];
}

describe("parseColor", () => {
  it("decodes #rrggbb", () => {
    expect(parseColor("#ff8000")).toEqual([255, 128, 0]);
  });

  it("rejects other syntax", () => {
    expect(() => parseColor("red")).toThrow(/not a #rrggbb/);
  });
});

describe("Canvas", () => {
  it("starts white and clips silently", () => {
    const c = new Canvas(4, 4);
    expect(pixel(c, 0, 0)).toEqual([255, 255, 255]);
    c.set(-1, 0, [0, 0, 0]);
    c.set(0, 99, [0, 0, 0]);
  });

  it("draws a horizontal line", () => {
    const c = new Canvas(8, 3);
    c.line(1, 1, 6, 1, [10, 20, 30]);
    for (let x = 1; x <= 6; x++) expect(pixel(c, x, 1)).toEqual([10, 20, 30]);
    expect(pixel(c, 0, 1)).toEqual([255, 255, 255]);
    expect(pixel(c, 7, 1)).toEqual([255, 255, 255]);
  });

  it("draws a diagonal without gaps in x", () => {
    const c = new Canvas(10, 10);
    c.line(0, 0, 9, 9, [0, 0, 0]);
    for (let x = 0; x < 10; x++) expect(pixel(c, x, x)).toEqual([0, 0, 0]);
  });

  it("renders text pixels inside the glyph box", () => {
    const c = new Canvas(40, 12);
    c.text(1, 9, "10", [0, 0, 0], 10, "start");
    let dark = 0;
    for (let i = 0; i < c.rgb.length; i += 3) {
      if (c.rgb[i] === 0) dark += 1;
    }
    expect(dark).toBeGreaterThan(5);
  });

  it("anchors end-aligned text to the left of x", () => {
    const c = new Canvas(40, 12);
    c.text(39, 9, "7", [0, 0, 0], 10, "end");
    let anyLeft = false;
    for (let y = 0; y < 12; y++) {
      for (let x = 32; x < 39; x++) {
        if (pixel(c, x, y)[0] === 0) anyLeft = true;
      }
    }
    expect(anyLeft).toBe(true);
  });
});
