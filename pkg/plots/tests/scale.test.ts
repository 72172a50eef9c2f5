import { describe, expect, it } from "vitest";

import {
  decadeTicks,
  formatTick,
  linearScale,
  linearTicks,
  logScale,
} from "../src/scale.js";

describe("linearScale", () => {
  it("maps the domain onto the range", () => {
    const s = linearScale([0, 10], [100, 200]);
    expect(s(0)).toBe(100);
    expect(s(10)).toBe(200);
    expect(s(5)).toBe(150);
  });

  it("survives a degenerate domain", () => {
    const s = linearScale([3, 3], [0, 100]);
    expect(Number.isFinite(s(3))).toBe(true);
  });
});

describe("logScale", () => {
  it("maps decades evenly", () => {
    const s = logScale([1e-4, 1], [0, 400]);
    expect(s(1e-4)).toBeCloseTo(0);
    expect(s(1e-2)).toBeCloseTo(200);
    expect(s(1)).toBeCloseTo(400);
  });

  it("rejects a non-positive domain", () => {
    expect(() => logScale([0, 1], [0, 1])).toThrow(/positive domain/);
  });
});

describe("ticks", () => {
  it("uses 1-2-5 steps", () => {
    expect(linearTicks(0, 10)).toEqual([0, 2, 4, 6, 8, 10]);
    expect(linearTicks(-1, 1)).toEqual([-1, -0.5, 0, 0.5, 1]);
  });

  it("places decade ticks", () => {
    expect(decadeTicks(1e-4, 1)).toEqual([1e-4, 1e-3, 1e-2, 1e-1, 1]);
  });

  it("thins long decade runs", () => {
    expect(decadeTicks(1e-12, 1).length).toBeLessThanOrEqual(8);
  });
});

describe("formatTick", () => {
  it("keeps a readable middle band", () => {
    expect(formatTick(0)).toBe("0");
    expect(formatTick(0.25)).toBe("0.25");
    expect(formatTick(-3)).toBe("-3");
  });

  it("switches to exponent form outside it", () => {
    expect(formatTick(1e-4)).toBe("1e-4");
    expect(formatTick(2e-5)).toBe("2x1e-5");
    expect(formatTick(1e5)).toBe("1e5");
  });
});
