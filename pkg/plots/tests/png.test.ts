import * as zlib from "node:zlib";

import { describe, expect, it } from "vitest";

import { crc32, encodePng } from "../src/png.js";

describe("crc32", () => {
  it("matches the published check value", () => {
    // the canonical test vector for this polynomial
    expect(crc32(Buffer.from("123456789", "ascii"))).toBe(0xcbf43926);
  });
});

describe("encodePng", () => {
  const rgb = Uint8Array.from([255, 0, 0, 0, 0, 255]); // red, blue
  const png = encodePng(2, 1, rgb);

  it("starts with the PNG signature", () => {
    expect([...png.subarray(0, 8)]).toEqual([137, 80, 78, 71, 13, 10, 26, 10]);
  });

  it("stores the dimensions in IHDR", () => {
    expect(png.subarray(12, 16).toString("ascii")).toBe("IHDR");
    expect(png.readUInt32BE(16)).toBe(2);
    expect(png.readUInt32BE(20)).toBe(1);
    expect(png[24]).toBe(8); // bit depth
    expect(png[25]).toBe(2); // truecolor
  });

  it("round-trips the pixels through the IDAT chunk", () => {
    const idatLen = png.readUInt32BE(33);
    expect(png.subarray(37, 41).toString("ascii")).toBe("IDAT");
    const raw = zlib.inflateSync(png.subarray(41, 41 + idatLen));
    expect([...raw]).toEqual([0, 255, 0, 0, 0, 0, 255]); // filter byte + rgb
  });

  it("ends with IEND", () => {
    expect(png.subarray(png.length - 8, png.length - 4).toString("ascii")).toBe(
      "IEND",
    );
  });

  it("is deterministic", () => {
    expect(encodePng(2, 1, rgb).equals(png)).toBe(true);
  });

  it("rejects a wrong-sized buffer", () => {
    expect(() => encodePng(2, 2, rgb)).toThrow(/expected 12/);
  });
});
