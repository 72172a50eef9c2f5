import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, it } from "vitest";

import { main, parseArgs, renderJob } from "../src/cli.js";
import { buildFigure, FIGURE_KINDS } from "../src/figures.js";
import { RunDir, SchemaError } from "../src/rundir.js";
import { sceneToPng } from "../src/raster.js";
import { sceneToSvg } from "../src/svg.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const LADDER = path.join(here, "fixtures", "ladder1d");
const COHERENT = path.join(here, "fixtures", "coherent2d");

const tmpDirs: string[] = [];

function tmp(): string {
  const d = fs.mkdtempSync(path.join(os.tmpdir(), "plots-"));
  tmpDirs.push(d);
  return d;
}

afterAll(() => {
  for (const d of tmpDirs) fs.rmSync(d, { recursive: true, force: true });
});

const PNG_SIG = [137, 80, 78, 71, 13, 10, 26, 10];

function svgTexts(svg: string, cls: string): string[] {
  const re = new RegExp(`<text class="${cls}"[^>]*>([^<]*)</text>`, "g");
  const out: string[] = [];
  for (const m of svg.matchAll(re)) out.push(m[1] as string);
  return out;
}

describe("every figure kind renders from a fixture run dir", () => {
  // the 2-d coherent run exercises the final-density heatmap and plane
  // trajectories; the 1-d ladder covers everything else
  const cases: [string, string][] = [
    [LADDER, "trajectories"],
    [LADDER, "hbar_zoom_panels"],
    [LADDER, "density_heatmap"],
    [LADDER, "convergence_loglog"],
    [COHERENT, "trajectories"],
    [COHERENT, "density_heatmap"],
  ];

  it.each(cases)("%s -> %s", (dir, kind) => {
    const out = tmp();
    const written = renderJob(parseArgs(["render", dir, kind, "--out", out]));
    expect(written).toEqual([
      path.join(out, `${kind}.png`),
      path.join(out, `${kind}.svg`),
    ]);
    const png = fs.readFileSync(written[0] as string);
    expect([...png.subarray(0, 8)]).toEqual(PNG_SIG);
    expect(png.readUInt32BE(16)).toBeGreaterThan(100); // width
    const svg = fs.readFileSync(written[1] as string, "utf8");
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
  });

  it("writes into the run directory when --out is absent", () => {
    const work = tmp();
    const copy = path.join(work, "run");
    fs.cpSync(LADDER, copy, { recursive: true });
    expect(main(["render", copy, "trajectories"])).toBe(0);
    expect(fs.existsSync(path.join(copy, "trajectories.png"))).toBe(true);
    expect(fs.existsSync(path.join(copy, "trajectories.svg"))).toBe(true);
  });

  it("renders byte-identically on repeat", () => {
    for (const kind of FIGURE_KINDS) {
      const a = tmp();
      const b = tmp();
      renderJob(parseArgs(["render", LADDER, kind, "--out", a]));
      renderJob(parseArgs(["render", LADDER, kind, "--out", b]));
      for (const ext of ["png", "svg"]) {
        const fa = fs.readFileSync(path.join(a, `${kind}.${ext}`));
        const fb = fs.readFileSync(path.join(b, `${kind}.${ext}`));
        expect(fa.equals(fb), `${kind}.${ext}`).toBe(true);
      }
    }
  });
});

describe("hbar_zoom_panels", () => {
  const run = new RunDir(LADDER);
  const svg = sceneToSvg(buildFigure(run, "hbar_zoom_panels"));

  it("shows exactly one panel per rung, labeled by divisor", () => {
    const labels = svgTexts(svg, "panel-label");
    expect(labels).toEqual([
      "hbar / 10",
      "hbar / 100",
      "hbar / 1000",
      "hbar / 10000",
    ]);
    const frames = svg.match(/class="panel-frame"/g) ?? [];
    expect(frames.length).toBe(4);
  });

  it("draws classical and quantum paths in every panel", () => {
    const classical = svg.match(/class="classical"/g) ?? [];
    const quantum = svg.match(/class="quantum"/g) ?? [];
    expect(classical.length).toBeGreaterThanOrEqual(4 * 20);
    expect(quantum.length).toBeGreaterThanOrEqual(4 * 20);
  });

  it("honors an explicit zoom window and layout", () => {
    const scene = buildFigure(run, "hbar_zoom_panels", {
      zoom: [0, 2, -1, 1],
      columns: 4,
    });
    const one = sceneToSvg(scene);
    expect(svgTexts(one, "panel-label").length).toBe(4);
    expect(scene.width).toBeGreaterThan(4 * 360);
  });
});

describe("figure content", () => {
  it("trajectories legend names every rung", () => {
    const svg = sceneToSvg(buildFigure(new RunDir(LADDER), "trajectories"));
    const legend = svgTexts(svg, "legend");
    expect(legend).toContain("hbar/10");
    expect(legend).toContain("hbar/10000");
    expect(legend).toContain("classical");
  });

  it("convergence figure annotates fitted slopes", () => {
    const svg = sceneToSvg(buildFigure(new RunDir(LADDER), "convergence_loglog"));
    const legend = svgTexts(svg, "legend").join(" ");
    expect(legend).toMatch(/deviation median \(slope [12]\.\d\d\)/);
    expect(legend).toMatch(/density l1 \(slope [12]\.\d\d\)/);
  });

  it("heatmap embeds the cell image and a colorbar", () => {
    const svg = sceneToSvg(buildFigure(new RunDir(COHERENT), "density_heatmap"));
    expect(svg).toMatch(/<image [^>]*href="data:image\/png;base64,/);
    expect(svg).toContain("final density");
  });

  it("heatmap picks the requested rung", () => {
    const svg = sceneToSvg(
      buildFigure(new RunDir(LADDER), "density_heatmap", { rung: 1000 }),
    );
    expect(svg).toContain("hbar/1000");
  });
});

describe("schema errors name the offending piece", () => {
  function corrupted(mutate: (dir: string) => void): string {
    const dir = path.join(tmp(), "run");
    fs.cpSync(LADDER, dir, { recursive: true });
    mutate(dir);
    return dir;
  }

  it("rejects a directory without a manifest", () => {
    const dir = corrupted((d) => fs.rmSync(path.join(d, "manifest.json")));
    expect(() => new RunDir(dir)).toThrow(/no manifest.json/);
  });

  it("names a renamed trajectory column", () => {
    const dir = corrupted((d) => {
      const p = path.join(d, "trajectories.csv");
      const text = fs.readFileSync(p, "utf8");
      fs.writeFileSync(p, text.replace("hbar_divisor", "divisor"));
    });
    expect(() => new RunDir(dir).trajectories()).toThrow(
      /missing column "hbar_divisor"/,
    );
  });

  it("names a corrupt metrics entry", () => {
    const dir = corrupted((d) => {
      const p = path.join(d, "metrics.json");
      const doc = JSON.parse(fs.readFileSync(p, "utf8"));
      doc.rungs[0].hbar = "soon";
      fs.writeFileSync(p, JSON.stringify(doc));
    });
    expect(() => new RunDir(dir)).toThrow(/rungs\[0\].hbar is not a finite/);
  });

  it("needs two rungs for a convergence figure", () => {
    expect(() => buildFigure(new RunDir(COHERENT), "convergence_loglog")).toThrow(
      /at least 2 rungs/,
    );
  });

  it("reports a missing density dump with the expected names", () => {
    const dir = corrupted((d) =>
      fs.rmSync(path.join(d, "fields"), { recursive: true }),
    );
    expect(() => buildFigure(new RunDir(dir), "density_heatmap")).toThrow(
      /density_final_div\*\.csv or density_history_div\*\.csv/,
    );
  });

  it("exits 2 on schema problems and 3 never for bad usage", () => {
    expect(main(["render", path.join(os.tmpdir(), "nope"), "trajectories"])).toBe(2);
    expect(main(["render", LADDER, "sunburst"])).toBe(2);
    expect(main(["oops"])).toBe(2);
  });
});

describe("cli argument parsing", () => {
  it("parses options", () => {
    const job = parseArgs([
      "render",
      LADDER,
      "hbar_zoom_panels",
      "--out",
      "/tmp/o",
      "--zoom",
      "0,1,2,3",
      "--columns",
      "4",
    ]);
    expect(job.out).toBe("/tmp/o");
    expect(job.opts.zoom).toEqual([0, 1, 2, 3]);
    expect(job.opts.columns).toBe(4);
  });

  it("rejects malformed options", () => {
    expect(() => parseArgs(["render", LADDER, "trajectories", "--zoom", "1,2"]))
      .toThrow(/--zoom expects/);
    expect(() => parseArgs(["render", LADDER, "trajectories", "--columns", "x"]))
      .toThrow(/--columns expects/);
    expect(() => parseArgs(["render", LADDER])).toThrow(/usage:/);
  });
});

describe("png and svg stay in lockstep", () => {
  it("rasterizes the same scene that the svg serializes", () => {
    const scene = buildFigure(new RunDir(LADDER), "trajectories");
    const png = sceneToPng(scene);
    expect(png.readUInt32BE(16)).toBe(scene.width);
    expect(png.readUInt32BE(20)).toBe(scene.height);
    const svg = sceneToSvg(scene);
    expect(svg).toContain(`width="${scene.width}"`);
    expect(svg).toContain(`height="${scene.height}"`);
  });
});
