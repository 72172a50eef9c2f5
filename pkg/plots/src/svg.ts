/** Scene to SVG text. Deterministic: fixed attribute order, coordinates
 * rounded to 1/100 px, cell images embedded as base64 PNG so the file holds
 * no external references. */

import { encodePng } from "./png.js";
import { Scene, SceneItem } from "./scene.js";

function n(v: number): string {
  return String(Math.round(v * 100) / 100);
}

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function item(it: SceneItem): string {
  switch (it.kind) {
    case "polyline": {
      const pts: string[] = [];
      for (let i = 0; i < it.points.length; i += 2) {
        pts.push(`${n(it.points[i] as number)},${n(it.points[i + 1] as number)}`);
      }
      const cls = it.cls ? ` class="${esc(it.cls)}"` : "";
      return (
        `<polyline${cls} points="${pts.join(" ")}" fill="none" ` +
        `stroke="${it.color}" stroke-width="${n(it.width)}"/>`
      );
    }
    case "rect": {
      const cls = it.cls ? ` class="${esc(it.cls)}"` : "";
      const fill = ` fill="${it.fill ?? "none"}"`;
      const stroke = it.stroke ? ` stroke="${it.stroke}"` : "";
      return (
        `<rect${cls} x="${n(it.x)}" y="${n(it.y)}" width="${n(it.w)}" ` +
        `height="${n(it.h)}"${fill}${stroke}/>`
      );
    }
    case "text": {
      const cls = it.cls ? ` class="${esc(it.cls)}"` : "";
      const anchor =
        it.anchor === "start" ? "" : ` text-anchor="${it.anchor}"`;
      return (
        `<text${cls} x="${n(it.x)}" y="${n(it.y)}" font-family="monospace" ` +
        `font-size="${n(it.size)}" fill="${it.color}"${anchor}>` +
        `${esc(it.text)}</text>`
      );
    }
    case "cells": {
      const png = encodePng(it.cols, it.rows, it.rgb);
      const uri = `data:image/png;base64,${png.toString("base64")}`;
      return (
        `<image x="${n(it.x)}" y="${n(it.y)}" width="${n(it.w)}" ` +
        `height="${n(it.h)}" preserveAspectRatio="none" ` +
        `image-rendering="pixelated" href="${uri}"/>`
      );
    }
  }
}

export function sceneToSvg(scene: Scene): string {
  const head =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
    `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">`;
  const bg = `<rect x="0" y="0" width="${scene.width}" height="${scene.height}" fill="#ffffff"/>`;
  const body = scene.items.map(item).join("\n");
  return `${head}\n${bg}\n${body}\n</svg>\n`;
}
