/** `render <run_dir> <kind> [--out DIR] [--zoom a,b,c,d] [--columns N]
 * [--rung D]` writes <kind>.png and <kind>.svg next to the run files (or
 * into --out). Exit codes follow the producer: 0 ok, 2 bad invocation or
 * schema mismatch, 3 unexpected failure. */

import * as fs from "node:fs";
import * as path from "node:path";

import { SchemaError } from "./csv.js";
import { buildFigure, FIGURE_KINDS, FigureKind, FigureOptions } from "./figures.js";
import { sceneToPng } from "./raster.js";
import { RunDir } from "./rundir.js";
import { sceneToSvg } from "./svg.js";

export class UsageError extends Error {}

const USAGE =
  `usage: render <run_dir> <kind> [--out DIR] [--zoom XMIN,XMAX,YMIN,YMAX]\n` +
  `              [--columns N] [--rung DIVISOR]\n` +
  `kinds: ${FIGURE_KINDS.join(", ")}`;

interface Job {
  runDir: string;
  kind: FigureKind;
  out: string;
  opts: FigureOptions;
}

export function parseArgs(argv: string[]): Job {
  if (argv[0] !== "render") {
    throw new UsageError(`unknown command ${JSON.stringify(argv[0] ?? "")}\n${USAGE}`);
  }
  const positional: string[] = [];
  const opts: FigureOptions = {};
  let out: string | null = null;
  let i = 1;
  while (i < argv.length) {
    const arg = argv[i] as string;
    const next = (): string => {
      i += 1;
      const v = argv[i];
      if (v === undefined) throw new UsageError(`${arg} needs a value\n${USAGE}`);
      return v;
    };
    if (arg === "--out") {
      out = next();
    } else if (arg === "--zoom") {
      const parts = next().split(",").map(Number);
      if (parts.length !== 4 || parts.some((v) => !Number.isFinite(v))) {
        throw new UsageError(`--zoom expects XMIN,XMAX,YMIN,YMAX\n${USAGE}`);
      }
      opts.zoom = parts as [number, number, number, number];
    } else if (arg === "--columns") {
      const v = Number(next());
      if (!Number.isInteger(v) || v < 1) {
        throw new UsageError(`--columns expects a positive integer\n${USAGE}`);
      }
      opts.columns = v;
    } else if (arg === "--rung") {
      const v = Number(next());
      if (!Number.isFinite(v)) {
        throw new UsageError(`--rung expects a divisor number\n${USAGE}`);
      }
      opts.rung = v;
    } else if (arg.startsWith("-")) {
      throw new UsageError(`unknown option ${arg}\n${USAGE}`);
    } else {
      positional.push(arg);
    }
    i += 1;
  }
  if (positional.length !== 2) {
    throw new UsageError(USAGE);
  }
  const [runDir, kind] = positional as [string, string];
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(
      `unknown figure kind ${JSON.stringify(kind)}; pick one of ` +
        FIGURE_KINDS.join(", "),
    );
  }
  return { runDir, kind: kind as FigureKind, out: out ?? runDir, opts };
}

export function renderJob(job: Job): string[] {
  const run = new RunDir(job.runDir);
  const scene = buildFigure(run, job.kind, job.opts);
  fs.mkdirSync(job.out, { recursive: true });
  const png = path.join(job.out, `${job.kind}.png`);
  const svg = path.join(job.out, `${job.kind}.svg`);
  fs.writeFileSync(png, sceneToPng(scene));
  fs.writeFileSync(svg, sceneToSvg(scene));
  return [png, svg];
}

export function main(argv: string[]): number {
  try {
    const job = parseArgs(argv);
    const written = renderJob(job);
    for (const p of written) console.log(`wrote ${p}`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError || err instanceof SchemaError) {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    console.error(`unexpected: ${(err as Error).stack ?? err}`);
    return 3;
  }
}

const entry = process.argv[1];
if (entry && (entry.endsWith("cli.js") || entry.endsWith("cli.ts"))) {
  process.exit(main(process.argv.slice(2)));
}
