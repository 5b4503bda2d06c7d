/**
 * Campaign figures. Plotting is a pure view of the stored CSVs: every number
 * drawn or annotated comes from the artifact directory, and slope/ratio
 * annotations are taken from the manifest after checking that they agree
 * with a recomputation from the CSV rows to 1e-12.
 */

import { readdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";
import { column, numericColumn, readCsv, SchemaError, Table } from "./csv.js";
import { loadManifest, Manifest } from "./manifest.js";
import { dataLayerRegression, recomputePredicate } from "./recompute.js";
import { FigureSpec, PALETTE, renderFigure } from "./svg.js";

export interface RenderedFigure {
  file: string;
  svg: string;
  annotations: string[];
}

function annotationValue(dir: string, manifest: Manifest, name: string): number {
  const spec = manifest.predicates[name];
  if (!spec || spec.value === null) {
    throw new SchemaError(`manifest predicate ${name} missing`);
  }
  const recomputed = recomputePredicate(dir, manifest, name);
  if (recomputed !== null && Math.abs(recomputed - spec.value) > 1e-12) {
    throw new SchemaError(
      `annotation ${name} disagrees with CSV recomputation: ` +
        `${spec.value} vs ${recomputed}`,
    );
  }
  return spec.value;
}

function groupBy(keys: number[], xs: number[], ys: number[]): Map<number, [number[], number[]]> {
  const groups = new Map<number, [number[], number[]]>();
  for (let i = 0; i < keys.length; i++) {
    if (!groups.has(keys[i])) groups.set(keys[i], [[], []]);
    const [gx, gy] = groups.get(keys[i])!;
    gx.push(xs[i]);
    gy.push(ys[i]);
  }
  return groups;
}

function seriesDecayFigures(dir: string, manifest: Manifest): RenderedFigure[] {
  const out: RenderedFigure[] = [];
  const files = readdirSync(dir)
    .filter((f) => f.startsWith("series_rho") && f.endsWith(".csv"))
    .sort();
  for (const file of files) {
    const rhoTag = basename(file, ".csv").slice("series_rho".length);
    const table = readCsv(join(dir, file));
    const k = numericColumn(table, "k");
    const minus = numericColumn(table, "term_norm_minus");
    const plus = numericColumn(table, "term_norm_plus");
    const alpha = manifest.parameters[`alpha_hat_rho${rhoTag}`];
    const annotations =
      typeof alpha === "number" ? [`alpha_hat = ${alpha}`] : [];
    const spec: FigureSpec = {
      title: `Series term decay (rho = ${rhoTag})`,
      xLabel: "term index k",
      yLabel: "term norm",
      yLog: true,
      series: [
        { label: "minus piece", x: k, y: minus, color: PALETTE[0] },
        { label: "plus piece", x: k, y: plus, color: PALETTE[1] },
      ],
      annotations,
    };
    out.push({
      file: `series_decay_rho${rhoTag}.svg`,
      svg: renderFigure(spec),
      annotations,
    });
  }
  if (!files.length) {
    throw new SchemaError("no series_rho*.csv in artifact");
  }
  return out;
}

function remainderRateFigure(dir: string, manifest: Manifest): RenderedFigure {
  const table = readCsv(join(dir, "remainder.csv"));
  const ks = numericColumn(table, "K");
  const rhos = numericColumn(table, "rho");
  const rems = numericColumn(table, "remainder_proxy_norm");
  const annotations: string[] = [];
  const series = [...groupBy(ks, rhos, rems).entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([k, [x, y]], i) => {
      const name = `slope_K${k}`;
      if (manifest.predicates[name]) {
        annotations.push(`K=${k}: slope = ${annotationValue(dir, manifest, name)}`);
      }
      return { label: `K = ${k}`, x, y, color: PALETTE[i % PALETTE.length] };
    });
  const spec: FigureSpec = {
    title: "Truncation remainder vs contrast",
    xLabel: "|rho|",
    yLabel: "proxy norm of remainder",
    xLog: true,
    yLog: true,
    series,
    annotations,
  };
  return { file: "remainder_rate.svg", svg: renderFigure(spec), annotations };
}

function sweepFigures(dir: string, manifest: Manifest): RenderedFigure[] {
  const out: RenderedFigure[] = [];
  const files = readdirSync(dir)
    .filter((f) => f.startsWith("sweep_") && f.endsWith(".csv"))
    .sort();
  for (const file of files) {
    const suffix = basename(file, ".csv").slice("sweep_".length);
    const table = readCsv(join(dir, file));
    const re = numericColumn(table, "rho_re");
    const im = numericColumn(table, "rho_im");
    const mod = re.map((v, i) => Math.hypot(v, im[i]));
    const ratio = column(table, "ratio");
    const x: number[] = [];
    const y: number[] = [];
    ratio.forEach((v, i) => {
      if (v !== null) {
        x.push(mod[i]);
        y.push(v);
      }
    });
    const name = `maxmin_${suffix}`;
    const annotations = manifest.predicates[name]
      ? [`max/min = ${annotationValue(dir, manifest, name)}`]
      : [];
    const spec: FigureSpec = {
      title: `Uniformity sweep (${suffix})`,
      xLabel: "|rho|",
      yLabel: "proxy norm / data norm",
      xLog: true,
      series: [{ label: "monitored ratio", x, y, color: PALETTE[0] }],
      annotations,
    };
    out.push({ file: `uniformity_${suffix}.svg`, svg: renderFigure(spec), annotations });
  }
  return out;
}

function checkerboardFigure(dir: string, manifest: Manifest): RenderedFigure {
  const cb = readCsv(join(dir, "flux_growth_checkerboard.csv"));
  const an = readCsv(join(dir, "flux_growth_annulus.csv"));
  const annotations = [
    `checkerboard strictly increasing = ${
      annotationValue(dir, manifest, "checkerboard_strictly_increasing") === 1
    }`,
    `annulus max/min = ${annotationValue(dir, manifest, "annulus_maxmin")}`,
  ];
  // levels are plotted shifted by one so the log-x axis accepts level 0
  const shift = (lv: number[]) => lv.map((v) => v + 1);
  const spec: FigureSpec = {
    title: "Interface-flux norm under refinement",
    xLabel: "refinement level + 1",
    yLabel: "flux L2(Sigma) norm",
    yLog: true,
    series: [
      {
        label: "checkerboard",
        x: shift(numericColumn(cb, "level")),
        y: numericColumn(cb, "flux_sigma"),
        color: PALETTE[1],
      },
      {
        label: "annulus",
        x: shift(numericColumn(an, "level")),
        y: numericColumn(an, "flux_sigma"),
        color: PALETTE[0],
      },
    ],
    annotations,
  };
  return { file: "checkerboard_growth.svg", svg: renderFigure(spec), annotations };
}

function maxwellFigure(dir: string, manifest: Manifest): RenderedFigure {
  const table = readCsv(join(dir, "sigma_sweep.csv"));
  const sigma = numericColumn(table, "sigma");
  const annotations = [
    `ratio max/min = ${annotationValue(dir, manifest, "ratio_maxmin")}`,
    `l2_minus slope = ${annotationValue(dir, manifest, "l2_minus_slope")}`,
  ];
  const spec: FigureSpec = {
    title: "High-conductivity sweep",
    xLabel: "sigma",
    yLabel: "norm",
    xLog: true,
    yLog: true,
    series: [
      { label: "|u| / |j|", x: sigma, y: numericColumn(table, "ratio"), color: PALETTE[0] },
      { label: "|u| on conductor", x: sigma, y: numericColumn(table, "l2_minus"), color: PALETTE[1] },
      {
        label: "sqrt(sigma) |u| on conductor",
        x: sigma,
        y: numericColumn(table, "sqrt_sigma_l2_minus"),
        color: PALETTE[2],
      },
    ],
    annotations,
  };
  return { file: "maxwell_sweep.svg", svg: renderFigure(spec), annotations };
}

function skinFigure(dir: string, manifest: Manifest): RenderedFigure {
  const table = readCsv(join(dir, "skin_remainder.csv"));
  const ms = numericColumn(table, "m");
  const deltas = numericColumn(table, "delta");
  const rems = numericColumn(table, "weighted_remainder");
  const annotations: string[] = [];
  const series = [...groupBy(ms, deltas, rems).entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([m, [x, y]], i) => {
      annotations.push(`m=${m}: slope = ${annotationValue(dir, manifest, `slope_m${m}`)}`);
      return { label: `order m = ${m}`, x, y, color: PALETTE[i % PALETTE.length] };
    });
  const spec: FigureSpec = {
    title: "Skin-expansion remainder vs delta",
    xLabel: "delta",
    yLabel: "weighted remainder",
    xLog: true,
    yLog: true,
    series,
    annotations,
  };
  return { file: "skin_remainder.svg", svg: renderFigure(spec), annotations };
}

const RENDERERS: Record<string, (dir: string, m: Manifest) => RenderedFigure[]> = {
  series: (d, m) => seriesDecayFigures(d, m).concat(remainderRateFigure(d, m)),
  symmetric: (d, m) =>
    seriesDecayFigures(d, m).concat(remainderRateFigure(d, m)).concat(sweepFigures(d, m)),
  modified: (d, m) =>
    seriesDecayFigures(d, m).concat(remainderRateFigure(d, m)).concat(sweepFigures(d, m)),
  limit_rate: (d, m) => [remainderRateFigure(d, m)],
  uniformity: (d, m) => {
    const figs = sweepFigures(d, m);
    if (!figs.length) throw new SchemaError("no sweep CSVs in uniformity artifact");
    return figs;
  },
  checkerboard: (d, m) => [checkerboardFigure(d, m)],
  maxwell_uniform: (d, m) => [maxwellFigure(d, m)],
  skin: (d, m) => [skinFigure(d, m)],
};

export function plotCampaign(
  artifactDir: string,
  outDir?: string,
): RenderedFigure[] {
  const manifest = loadManifest(artifactDir);
  const renderer = RENDERERS[manifest.campaign];
  if (!renderer) {
    throw new SchemaError(`no renderer for campaign ${manifest.campaign}`);
  }
  const regression = dataLayerRegression(artifactDir, manifest);
  if (regression.mismatches.length) {
    const detail = regression.mismatches
      .map((m) => `${m.name}: ${m.stored} vs ${m.recomputed}`)
      .join("; ");
    throw new SchemaError(`manifest/CSV mismatch: ${detail}`);
  }
  const figures = renderer(artifactDir, manifest);
  if (outDir) {
    for (const fig of figures) {
      writeFileSync(join(outDir, fig.file), fig.svg);
    }
  }
  return figures;
}
