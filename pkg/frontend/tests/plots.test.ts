import { cpSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";
import { SchemaError } from "../src/csv.js";
import { loadManifest } from "../src/manifest.js";
import { plotCampaign } from "../src/plots.js";
import { dataLayerRegression } from "../src/recompute.js";

const FIXTURES = join(__dirname, "..", "fixtures");
const KINDS = [
  "series",
  "limit_rate",
  "uniformity",
  "symmetric",
  "modified",
  "checkerboard",
  "maxwell_uniform",
  "skin",
];

const cleanups: string[] = [];
afterEach(() => {
  while (cleanups.length) rmSync(cleanups.pop()!, { recursive: true, force: true });
});

function scratchCopy(kind: string): string {
  const dir = mkdtempSync(join(tmpdir(), "contrastlab-plots-"));
  cleanups.push(dir);
  cpSync(join(FIXTURES, kind), dir, { recursive: true });
  return dir;
}

describe("plotCampaign renders every campaign artifact type", () => {
  for (const kind of KINDS) {
    it(`renders ${kind}`, () => {
      const figures = plotCampaign(join(FIXTURES, kind));
      expect(figures.length).toBeGreaterThan(0);
      for (const fig of figures) {
        expect(fig.svg.startsWith("<svg")).toBe(true);
        expect(fig.svg).toContain("</svg>");
      }
    });
  }

  it("writes SVG files when an output directory is given", () => {
    const out = mkdtempSync(join(tmpdir(), "contrastlab-svg-"));
    cleanups.push(out);
    const figures = plotCampaign(join(FIXTURES, "limit_rate"), out);
    for (const fig of figures) {
      const text = readFileSync(join(out, fig.file), "utf8");
      expect(text).toBe(fig.svg);
    }
  });

  it("is deterministic byte for byte", () => {
    for (const kind of KINDS) {
      const a = plotCampaign(join(FIXTURES, kind));
      const b = plotCampaign(join(FIXTURES, kind));
      expect(a.map((f) => f.svg)).toEqual(b.map((f) => f.svg));
    }
  });
});

describe("annotations", () => {
  it("slope annotations equal the manifest values exactly", () => {
    const manifest = loadManifest(join(FIXTURES, "limit_rate"));
    const figures = plotCampaign(join(FIXTURES, "limit_rate"));
    const slope0 = manifest.predicates["slope_K0"].value;
    const joined = figures.flatMap((f) => f.annotations).join("; ");
    expect(joined).toContain(`K=0: slope = ${slope0}`);
  });

  it("series decay annotates alpha_hat from the manifest", () => {
    const manifest = loadManifest(join(FIXTURES, "series"));
    const figures = plotCampaign(join(FIXTURES, "series"));
    const alpha = manifest.parameters["alpha_hat_rho100"];
    const decay = figures.find((f) => f.file === "series_decay_rho100.svg")!;
    expect(decay.annotations[0]).toBe(`alpha_hat = ${alpha}`);
  });
});

describe("data-layer regression", () => {
  for (const kind of KINDS) {
    it(`recomputed predicates match the manifest for ${kind}`, () => {
      const dir = join(FIXTURES, kind);
      const manifest = loadManifest(dir);
      const result = dataLayerRegression(dir, manifest);
      expect(result.mismatches).toEqual([]);
      expect(result.checked.length).toBeGreaterThan(0);
    });
  }

  it("detects a perturbed CSV value", () => {
    const dir = scratchCopy("limit_rate");
    const path = join(dir, "remainder.csv");
    const lines = readFileSync(path, "utf8").trim().split("\n");
    const parts = lines[1].split(",");
    parts[2] = String(Number(parts[2]) * 10);
    lines[1] = parts.join(",");
    writeFileSync(path, lines.join("\n") + "\n");
    const manifest = loadManifest(dir);
    const result = dataLayerRegression(dir, manifest);
    expect(result.mismatches.length).toBeGreaterThan(0);
    expect(() => plotCampaign(dir)).toThrow(SchemaError);
  });
});

describe("schema errors", () => {
  it("empty directory", () => {
    const dir = mkdtempSync(join(tmpdir(), "contrastlab-empty-"));
    cleanups.push(dir);
    expect(() => plotCampaign(dir)).toThrow(SchemaError);
  });

  it("missing columns", () => {
    const dir = scratchCopy("skin");
    writeFileSync(join(dir, "skin_remainder.csv"), "bogus,columns\n1,2\n");
    expect(() => plotCampaign(dir)).toThrow(SchemaError);
  });
});
