/** Figure builders: each takes a loaded run directory and returns a scene.
 * The four kinds mirror what the run files support directly; nothing here
 * reruns physics, it only draws what the CSV/JSON contract provides. */

import { SchemaError } from "./csv.js";
import { linearScale, logScale, formatTick } from "./scale.js";
import {
  CLASSICAL_COLOR,
  clippedPolyline,
  drawAxes,
  Frame,
  FRAME_COLOR,
  makeScene,
  Scene,
  seriesColor,
} from "./scene.js";
import { Path2, RunDir, Trajectories } from "./rundir.js";

export const FIGURE_KINDS = [
  "trajectories",
  "hbar_zoom_panels",
  "density_heatmap",
  "convergence_loglog",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureOptions {
  /** zoom window for hbar_zoom_panels: [xmin, xmax, ymin, ymax] */
  zoom?: [number, number, number, number];
  /** panel columns for hbar_zoom_panels */
  columns?: number;
  /** rung divisor for density_heatmap (default: smallest available) */
  rung?: number;
}

export function buildFigure(
  run: RunDir,
  kind: FigureKind,
  opts: FigureOptions = {},
): Scene {
  switch (kind) {
    case "trajectories":
      return trajectoriesFigure(run);
    case "hbar_zoom_panels":
      return hbarZoomPanels(run, opts);
    case "density_heatmap":
      return densityHeatmap(run, opts);
    case "convergence_loglog":
      return convergenceLoglog(run);
  }
}

function fmtDivisor(d: number): string {
  return Number.isInteger(d) ? String(d) : formatTick(d);
}

interface Bounds {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

function pathXY(p: Path2, dim: 1 | 2): { x: number[]; y: number[] } {
  // 1-d runs plot position against time, 2-d runs the plane itself
  return dim === 2 ? { x: p.x1, y: p.x2 as number[] } : { x: p.t, y: p.x1 };
}

function boundsOf(paths: Path2[], dim: 1 | 2): Bounds {
  let xmin = Infinity;
  let xmax = -Infinity;
  let ymin = Infinity;
  let ymax = -Infinity;
  for (const p of paths) {
    const { x, y } = pathXY(p, dim);
    for (const v of x) {
      if (v < xmin) xmin = v;
      if (v > xmax) xmax = v;
    }
    for (const v of y) {
      if (v < ymin) ymin = v;
      if (v > ymax) ymax = v;
    }
  }
  return { xmin, xmax, ymin, ymax };
}

function pad(b: Bounds, frac: number): Bounds {
  const dx = (b.xmax - b.xmin) || 1;
  const dy = (b.ymax - b.ymin) || 1;
  return {
    xmin: b.xmin - frac * dx,
    xmax: b.xmax + frac * dx,
    ymin: b.ymin - frac * dy,
    ymax: b.ymax + frac * dy,
  };
}

function frameFor(
  scene: Scene,
  box: { x0: number; y0: number; w: number; h: number },
  b: Bounds,
  log = false,
): Frame {
  const mk = log ? logScale : linearScale;
  return {
    ...box,
    xs: mk([b.xmin, b.xmax], [box.x0, box.x0 + box.w]),
    ys: mk([b.ymin, b.ymax], [box.y0 + box.h, box.y0]),
  };
}

function title(scene: Scene, text: string): void {
  scene.items.push({
    kind: "text",
    x: scene.width / 2,
    y: 20,
    text,
    color: FRAME_COLOR,
    size: 13,
    anchor: "middle",
    cls: "title",
  });
}

// -- trajectories -----------------------------------------------------------

function trajectoriesFigure(run: RunDir): Scene {
  const traj = run.trajectories();
  const scene = makeScene(860, 620);
  const box = { x0: 70, y0: 50, w: 640, h: 510 };
  const b = pad(boundsOf(traj.paths, traj.dim), 0.05);
  const frame = frameFor(scene, box, b);
  const [xlabel, ylabel] = traj.dim === 2 ? ["x1", "x2"] : ["t", "x1"];

  drawAxes(scene, frame, xlabel, ylabel);
  title(scene, `${run.metrics.scenario.name}: trajectories`);

  for (const p of traj.paths.filter((p) => p.divisor === 0)) {
    const { x, y } = pathXY(p, traj.dim);
    scene.items.push(...clippedPolyline(frame, x, y, CLASSICAL_COLOR, 1, "classical"));
  }
  traj.divisors.forEach((d, i) => {
    const color = seriesColor(i);
    for (const p of traj.paths.filter((p) => p.divisor === d)) {
      const { x, y } = pathXY(p, traj.dim);
      scene.items.push(...clippedPolyline(frame, x, y, color, 1, "quantum"));
    }
  });

  const lx = box.x0 + box.w + 12;
  let ly = box.y0 + 14;
  traj.divisors.forEach((d, i) => {
    scene.items.push({
      kind: "text",
      x: lx,
      y: ly,
      text: `hbar/${fmtDivisor(d)}`,
      color: seriesColor(i),
      size: 11,
      anchor: "start",
      cls: "legend",
    });
    ly += 16;
  });
  if (traj.paths.some((p) => p.divisor === 0)) {
    scene.items.push({
      kind: "text",
      x: lx,
      y: ly,
      text: "classical",
      color: CLASSICAL_COLOR,
      size: 11,
      anchor: "start",
      cls: "legend",
    });
  }
  return scene;
}

// -- hbar zoom panels -------------------------------------------------------

function hbarZoomPanels(run: RunDir, opts: FigureOptions): Scene {
  const traj = run.trajectories();
  if (traj.divisors.length === 0) {
    throw new SchemaError(
      "trajectories.csv: no quantum rungs (all hbar_divisor = 0)",
    );
  }
  const classical = traj.paths.filter((p) => p.divisor === 0);

  let b: Bounds;
  if (opts.zoom) {
    const [xmin, xmax, ymin, ymax] = opts.zoom;
    b = { xmin, xmax, ymin, ymax };
  } else {
    // shared window anchored on the classical fan so the collapse onto it
    // is visible across panels; quantum-only runs fall back to the last rung
    const anchor = classical.length > 0
      ? classical
      : traj.paths.filter((p) => p.divisor === traj.divisors[traj.divisors.length - 1]);
    b = pad(boundsOf(anchor, traj.dim), 0.2);
  }

  const n = traj.divisors.length;
  const columns = Math.max(1, Math.min(opts.columns ?? (n <= 2 ? n : 2), n));
  const rows = Math.ceil(n / columns);
  const panelW = 360;
  const panelH = 270;
  const marginL = 64;
  const marginT = 46;
  const gapX = 78;
  const gapY = 64;
  const scene = makeScene(
    marginL + columns * panelW + (columns - 1) * gapX + 40,
    marginT + rows * panelH + (rows - 1) * gapY + 50,
  );
  title(
    scene,
    `${run.metrics.scenario.name}: trajectories while hbar shrinks`,
  );
  const [xlabel, ylabel] = traj.dim === 2 ? ["x1", "x2"] : ["t", "x1"];

  traj.divisors.forEach((d, i) => {
    const col = i % columns;
    const row = Math.floor(i / columns);
    const box = {
      x0: marginL + col * (panelW + gapX),
      y0: marginT + row * (panelH + gapY),
      w: panelW,
      h: panelH,
    };
    const frame = frameFor(scene, box, b);
    drawAxes(scene, frame, row === rows - 1 ? xlabel : "", ylabel, {
      grid: false,
    });
    for (const p of classical) {
      const { x, y } = pathXY(p, traj.dim);
      scene.items.push(...clippedPolyline(frame, x, y, CLASSICAL_COLOR, 1, "classical"));
    }
    const color = seriesColor(i);
    for (const p of traj.paths.filter((p) => p.divisor === d)) {
      const { x, y } = pathXY(p, traj.dim);
      scene.items.push(...clippedPolyline(frame, x, y, color, 1, "quantum"));
    }
    scene.items.push({
      kind: "text",
      x: box.x0 + box.w / 2,
      y: box.y0 + box.h + 44,
      text: `hbar / ${fmtDivisor(d)}`,
      color: FRAME_COLOR,
      size: 12,
      anchor: "middle",
      cls: "panel-label",
    });
  });
  return scene;
}

// -- density heatmap --------------------------------------------------------

// eight anchors of a dark-to-bright perceptual ramp
const RAMP: [number, number, number][] = [
  [0, 0, 4],
  [40, 11, 84],
  [101, 21, 110],
  [159, 42, 99],
  [212, 72, 66],
  [245, 125, 21],
  [250, 193, 39],
  [252, 255, 164],
];

export function rampColor(u: number): [number, number, number] {
  const v = Math.min(1, Math.max(0, u)) * (RAMP.length - 1);
  const i = Math.min(RAMP.length - 2, Math.floor(v));
  const f = v - i;
  const a = RAMP[i] as [number, number, number];
  const b = RAMP[i + 1] as [number, number, number];
  return [
    Math.round(a[0] + f * (b[0] - a[0])),
    Math.round(a[1] + f * (b[1] - a[1])),
    Math.round(a[2] + f * (b[2] - a[2])),
  ];
}

interface FieldChoice {
  name: string;
  flavor: "final" | "history";
  divisor: number;
}

function densityDumps(run: RunDir): FieldChoice[] {
  const out: FieldChoice[] = [];
  for (const name of run.listFields()) {
    const m = /^density_(final|history)_div(.+)\.csv$/.exec(name);
    if (!m) continue;
    const divisor = Number(m[2]);
    if (!Number.isFinite(divisor)) continue;
    out.push({ name, flavor: m[1] as "final" | "history", divisor });
  }
  // prefer the snapshot dumps, then ascending divisor
  out.sort(
    (a, b) =>
      (a.flavor === b.flavor ? 0 : a.flavor === "final" ? -1 : 1) ||
      a.divisor - b.divisor,
  );
  return out;
}

function densityHeatmap(run: RunDir, opts: FigureOptions): Scene {
  const dumps = densityDumps(run);
  if (dumps.length === 0) {
    throw new SchemaError(
      `${run.dir}: no density dumps under fields/ ` +
        `(expected density_final_div*.csv or density_history_div*.csv)`,
    );
  }
  let choice = dumps[0] as FieldChoice;
  if (opts.rung !== undefined) {
    const hit = dumps.find((d) => d.divisor === opts.rung);
    if (!hit) {
      throw new SchemaError(
        `${run.dir}: no density dump for rung ${opts.rung} ` +
          `(have: ${dumps.map((d) => d.divisor).join(", ")})`,
      );
    }
    choice = hit;
  }

  const table = run.readField(choice.name);
  const src = `fields/${choice.name}`;
  const [cx, cy] =
    choice.flavor === "final" ? ["x1", "x2"] : ["t", "x1"];
  const xsRaw = Array.from(
    { length: table.rows.length },
    (_, r) => Number((table.rows[r] as string[])[table.columns.indexOf(cx)]),
  );
  const ysRaw = Array.from(
    { length: table.rows.length },
    (_, r) => Number((table.rows[r] as string[])[table.columns.indexOf(cy)]),
  );
  if (!table.columns.includes(cx)) {
    throw new SchemaError(`${src}: missing column "${cx}"`);
  }
  if (!table.columns.includes(cy)) {
    throw new SchemaError(`${src}: missing column "${cy}"`);
  }
  if (!table.columns.includes("value")) {
    throw new SchemaError(`${src}: missing column "value"`);
  }
  const vi = table.columns.indexOf("value");
  const values = table.rows.map((row, r) => {
    const v = Number(row[vi]);
    if (!Number.isFinite(v)) {
      throw new SchemaError(
        `${src}: column "value" row ${r + 1}: not a finite number`,
      );
    }
    return v;
  });

  const xs = [...new Set(xsRaw)].sort((a, b) => a - b);
  const ys = [...new Set(ysRaw)].sort((a, b) => a - b);
  if (xs.length * ys.length !== table.rows.length) {
    throw new SchemaError(
      `${src}: rows do not tile a grid ` +
        `(${xs.length} x ${ys.length} != ${table.rows.length})`,
    );
  }

  const vmax = Math.max(...values, 1e-300);
  const cols = xs.length;
  const rows = ys.length;
  const rgb = new Uint8Array(3 * cols * rows);
  const xIndex = new Map(xs.map((v, i) => [v, i]));
  const yIndex = new Map(ys.map((v, i) => [v, i]));
  for (let r = 0; r < table.rows.length; r++) {
    const ci = xIndex.get(xsRaw[r] as number) as number;
    const rj = yIndex.get(ysRaw[r] as number) as number;
    const row = rows - 1 - rj; // top of the image is the largest coordinate
    const c = rampColor((values[r] as number) / vmax);
    const o = 3 * (row * cols + ci);
    rgb[o] = c[0];
    rgb[o + 1] = c[1];
    rgb[o + 2] = c[2];
  }

  const scene = makeScene(860, 620);
  const box = { x0: 70, y0: 50, w: 640, h: 510 };
  const b: Bounds = {
    xmin: xs[0] as number,
    xmax: xs[xs.length - 1] as number,
    ymin: ys[0] as number,
    ymax: ys[ys.length - 1] as number,
  };
  const frame = frameFor(scene, box, b);
  scene.items.push({
    kind: "cells",
    x: box.x0,
    y: box.y0,
    w: box.w,
    h: box.h,
    cols,
    rows,
    rgb,
  });
  drawAxes(scene, frame, cx, cy, { grid: false });
  const what = choice.flavor === "final" ? "final density" : "density history";
  title(
    scene,
    `${run.metrics.scenario.name}: ${what}, hbar/${fmtDivisor(choice.divisor)}`,
  );

  // slim colorbar: 1 x 64 ramp image plus the two end labels
  const bar = new Uint8Array(3 * 64);
  for (let i = 0; i < 64; i++) {
    const c = rampColor(1 - i / 63);
    bar[3 * i] = c[0];
    bar[3 * i + 1] = c[1];
    bar[3 * i + 2] = c[2];
  }
  const bx = box.x0 + box.w + 24;
  scene.items.push({
    kind: "cells",
    x: bx,
    y: box.y0,
    w: 16,
    h: box.h,
    cols: 1,
    rows: 64,
    rgb: bar,
  });
  scene.items.push({
    kind: "rect",
    x: bx,
    y: box.y0,
    w: 16,
    h: box.h,
    stroke: FRAME_COLOR,
  });
  scene.items.push({
    kind: "text",
    x: bx + 20,
    y: box.y0 + 10,
    text: formatTick(parseFloat(vmax.toPrecision(3))),
    color: FRAME_COLOR,
    size: 10,
    anchor: "start",
  });
  scene.items.push({
    kind: "text",
    x: bx + 20,
    y: box.y0 + box.h,
    text: "0",
    color: FRAME_COLOR,
    size: 10,
    anchor: "start",
  });
  return scene;
}

// -- convergence ------------------------------------------------------------

interface Series {
  label: string;
  hbar: number[];
  value: number[];
  slope: number | null;
}

function fitSlope(sweep: Record<string, unknown>, key: string): number | null {
  const fit = sweep[key];
  if (!fit || typeof fit !== "object") return null;
  const s = (fit as Record<string, unknown>)["slope"];
  return typeof s === "number" && Number.isFinite(s) ? s : null;
}

function statisticalSeries(run: RunDir): Series[] {
  const rungs = run.metrics.rungs;
  const grab = (key: string, fitKey: string, label: string): Series | null => {
    const hbar: number[] = [];
    const value: number[] = [];
    for (const r of rungs) {
      const v = r[key];
      if (typeof v === "number" && Number.isFinite(v) && v > 0) {
        hbar.push(r.hbar);
        value.push(v);
      }
    }
    if (value.length < 2) return null;
    return { label, hbar, value, slope: fitSlope(run.metrics.sweep, fitKey) };
  };
  const out: Series[] = [];
  const dev = grab("deviation_median", "deviation_median_fit", "deviation median");
  if (dev) out.push(dev);
  const l1 = grab("density_l1", "density_l1_fit", "density l1");
  if (l1) out.push(l1);
  return out;
}

function deterministSeries(run: RunDir): Series[] {
  const rungs = run.metrics.rungs;
  const first = rungs[0] as RunDir["metrics"]["rungs"][number];
  const weak = first["weak_errors"];
  if (!weak || typeof weak !== "object") return [];
  const fits = (run.metrics.sweep["weak_error_fits"] ?? {}) as Record<string, unknown>;
  const out: Series[] = [];
  for (const name of Object.keys(weak as Record<string, unknown>).sort()) {
    const hbar: number[] = [];
    const value: number[] = [];
    for (const r of rungs) {
      const w = r["weak_errors"] as Record<string, unknown> | undefined;
      const v = w ? w[name] : undefined;
      if (typeof v === "number" && Number.isFinite(v) && Math.abs(v) > 0) {
        hbar.push(r.hbar);
        value.push(Math.abs(v));
      }
    }
    if (value.length < 2) continue;
    const fit = fits[name];
    const slope =
      fit && typeof fit === "object"
        ? ((fit as Record<string, unknown>)["slope"] as number | null)
        : null;
    out.push({ label: name, hbar, value, slope });
  }
  return out;
}

function convergenceLoglog(run: RunDir): Scene {
  if (run.metrics.rungs.length < 2) {
    throw new SchemaError(
      `metrics.json: convergence_loglog needs at least 2 rungs, ` +
        `found ${run.metrics.rungs.length}`,
    );
  }
  const series =
    run.metrics.scenario.kind === "determinist"
      ? deterministSeries(run)
      : statisticalSeries(run);
  if (series.length === 0) {
    throw new SchemaError(
      "metrics.json: no positive per-rung series to plot " +
        "(deviation_median / density_l1 / weak_errors)",
    );
  }

  let xmin = Infinity;
  let xmax = -Infinity;
  let ymin = Infinity;
  let ymax = -Infinity;
  for (const s of series) {
    for (const h of s.hbar) {
      xmin = Math.min(xmin, h);
      xmax = Math.max(xmax, h);
    }
    for (const v of s.value) {
      ymin = Math.min(ymin, v);
      ymax = Math.max(ymax, v);
    }
  }

  const scene = makeScene(860, 620);
  const box = { x0: 80, y0: 50, w: 560, h: 510 };
  const frame = frameFor(
    scene,
    box,
    {
      xmin: xmin / 1.5,
      xmax: xmax * 1.5,
      ymin: ymin / 2,
      ymax: ymax * 2,
    },
    true,
  );
  drawAxes(scene, frame, "hbar", "error");
  title(scene, `${run.metrics.scenario.name}: convergence in hbar`);

  series.forEach((s, i) => {
    const color = seriesColor(i);
    const pts: number[] = [];
    for (let k = 0; k < s.hbar.length; k++) {
      const px = frame.xs(s.hbar[k] as number);
      const py = frame.ys(s.value[k] as number);
      pts.push(px, py);
      scene.items.push({
        kind: "rect",
        x: px - 2.5,
        y: py - 2.5,
        w: 5,
        h: 5,
        fill: color,
        cls: "marker",
      });
    }
    scene.items.push({ kind: "polyline", points: pts, color, width: 1, cls: "series" });
    const slopeTxt = s.slope === null ? "" : ` (slope ${s.slope.toFixed(2)})`;
    scene.items.push({
      kind: "text",
      x: box.x0 + box.w + 14,
      y: box.y0 + 14 + 17 * i,
      text: `${s.label}${slopeTxt}`,
      color,
      size: 11,
      anchor: "start",
      cls: "legend",
    });
  });
  return scene;
}
