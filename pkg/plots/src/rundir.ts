/** Reader for the run directory contract of the semiclassical CLI:
 * manifest.json (written last, so its presence marks a complete run),
 * metrics.json, trajectories.csv and fields/<name>.csv. Everything the
 * figures need comes from these files; nothing is recomputed. */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  numericColumn,
  parseCsv,
  SchemaError,
  stringColumn,
  Table,
} from "./csv.js";

export { SchemaError } from "./csv.js";

export interface RungMetrics {
  divisor: number;
  hbar: number;
  [key: string]: unknown;
}

export interface Metrics {
  scenario: { name: string; kind: string; [key: string]: unknown };
  hbar_values: number[];
  rungs: RungMetrics[];
  sweep: Record<string, unknown>;
}

export interface Path2 {
  kind: string;
  divisor: number;
  particle: number;
  t: number[];
  x1: number[];
  x2: number[] | null;
}

export interface Trajectories {
  dim: 1 | 2;
  paths: Path2[];
  divisors: number[]; // quantum rungs, ascending, no duplicates
}

export class RunDir {
  readonly dir: string;
  readonly metrics: Metrics;
  private traj: Trajectories | null = null;

  constructor(dir: string) {
    this.dir = dir;
    if (!fs.existsSync(path.join(dir, "manifest.json"))) {
      throw new SchemaError(
        `${dir}: no manifest.json (incomplete or not a run directory)`,
      );
    }
    this.metrics = readMetrics(path.join(dir, "metrics.json"));
  }

  trajectories(): Trajectories {
    if (!this.traj) {
      this.traj = readTrajectories(path.join(this.dir, "trajectories.csv"));
    }
    return this.traj;
  }

  listFields(): string[] {
    const d = path.join(this.dir, "fields");
    if (!fs.existsSync(d)) return [];
    return fs.readdirSync(d).filter((n) => n.endsWith(".csv")).sort();
  }

  readField(name: string): Table {
    const p = path.join(this.dir, "fields", name);
    if (!fs.existsSync(p)) {
      throw new SchemaError(`${this.dir}: no field dump fields/${name}`);
    }
    return parseCsv(fs.readFileSync(p, "utf8"), `fields/${name}`);
  }
}

function asNumber(v: unknown, where: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new SchemaError(`metrics.json: ${where} is not a finite number`);
  }
  return v;
}

function readMetrics(file: string): Metrics {
  if (!fs.existsSync(file)) {
    throw new SchemaError(`${path.dirname(file)}: no metrics.json`);
  }
  let doc: unknown;
  try {
    doc = JSON.parse(fs.readFileSync(file, "utf8"));
  } catch (err) {
    throw new SchemaError(`metrics.json: ${(err as Error).message}`);
  }
  const m = doc as Record<string, unknown>;
  const scenario = m["scenario"] as Record<string, unknown> | undefined;
  if (!scenario || typeof scenario["name"] !== "string") {
    throw new SchemaError(`metrics.json: missing scenario.name`);
  }
  if (!Array.isArray(m["hbar_values"])) {
    throw new SchemaError(`metrics.json: missing column "hbar_values"`);
  }
  if (!Array.isArray(m["rungs"]) || m["rungs"].length === 0) {
    throw new SchemaError(`metrics.json: missing or empty "rungs"`);
  }
  const rungs = (m["rungs"] as Record<string, unknown>[]).map((r, i) => ({
    ...r,
    divisor: asNumber(r["divisor"], `rungs[${i}].divisor`),
    hbar: asNumber(r["hbar"], `rungs[${i}].hbar`),
  }));
  return {
    scenario: scenario as Metrics["scenario"],
    hbar_values: (m["hbar_values"] as unknown[]).map((v, i) =>
      asNumber(v, `hbar_values[${i}]`),
    ),
    rungs,
    sweep: (m["sweep"] as Record<string, unknown>) ?? {},
  };
}

function readTrajectories(file: string): Trajectories {
  if (!fs.existsSync(file)) {
    throw new SchemaError(`${path.dirname(file)}: no trajectories.csv`);
  }
  const table = parseCsv(fs.readFileSync(file, "utf8"), "trajectories.csv");
  if (table.rows.length === 0) {
    throw new SchemaError("trajectories.csv: no rows (n_particles = 0 run?)");
  }
  const src = "trajectories.csv";
  const kind = stringColumn(table, "kind", src);
  const divisor = numericColumn(table, "hbar_divisor", src);
  const particle = numericColumn(table, "particle", src);
  const t = numericColumn(table, "t", src);
  const x1 = numericColumn(table, "x1", src);
  const has2 = table.columns.includes("x2");
  const x2 = has2 ? numericColumn(table, "x2", src) : null;

  // rows arrive grouped by (kind, divisor, particle) and time-ordered
  const paths: Path2[] = [];
  let cur: Path2 | null = null;
  for (let i = 0; i < t.length; i++) {
    const k = kind[i] as string;
    const d = divisor[i] as number;
    const p = particle[i] as number;
    if (!cur || cur.kind !== k || cur.divisor !== d || cur.particle !== p) {
      cur = { kind: k, divisor: d, particle: p, t: [], x1: [], x2: has2 ? [] : null };
      paths.push(cur);
    }
    cur.t.push(t[i] as number);
    cur.x1.push(x1[i] as number);
    if (has2) (cur.x2 as number[]).push((x2 as Float64Array)[i] as number);
  }

  const divisors = [...new Set(paths.filter((p) => p.divisor > 0).map((p) => p.divisor))];
  divisors.sort((a, b) => a - b);
  return { dim: has2 ? 2 : 1, paths, divisors };
}
