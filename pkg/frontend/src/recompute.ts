/**
 * Data-layer regression: recompute every manifest predicate value from the
 * stored CSVs alone, mirroring the backend verifier. Plot annotations are
 * cross-checked against these values, never against re-run physics.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";
import { column, numericColumn, readCsv, SchemaError } from "./csv.js";
import { fitLoglogSlope, geomMean, maxOverMin } from "./stats.js";
import { Manifest, numericParameter } from "./manifest.js";

export function recomputePredicate(
  dir: string,
  manifest: Manifest,
  name: string,
): number | null {
  if (name.startsWith("maxmin_")) {
    const suffix = name.slice("maxmin_".length);
    const table = readCsv(join(dir, `sweep_${suffix}.csv`));
    const ratios = column(table, "ratio").filter((v): v is number => v !== null);
    return ratios.length ? maxOverMin(ratios) : null;
  }
  if (name.startsWith("equiv_rho")) {
    const rho = Number(name.slice("equiv_rho".length));
    const table = readCsv(join(dir, "remainder.csv"));
    const rhos = numericColumn(table, "rho");
    const rems = numericColumn(table, "remainder_proxy_norm");
    const sel = rems.filter((_, i) => Math.abs(rhos[i] - rho) <= 1e-9 * rho);
    const direct = numericParameter(manifest, `direct_proxy_rho${formatG(rho)}`);
    return sel.length ? sel[sel.length - 1] / direct : null;
  }
  if (name.startsWith("geometric_rho")) {
    const rho = Number(name.slice("geometric_rho".length));
    const table = readCsv(join(dir, `series_rho${formatG(rho)}.csv`));
    const ratios = column(table, "cumulative_ratio").filter(
      (v): v is number => v !== null,
    );
    const window = ratios.slice(Math.max(1, ratios.length - 5));
    if (!window.length) return null;
    const alpha = geomMean(window);
    return Math.max(...window.map((r) => Math.abs(r / alpha - 1)));
  }
  if (name.startsWith("slope_K")) {
    const k = Number(name.slice("slope_K".length));
    const table = readCsv(join(dir, "remainder.csv"));
    const ks = numericColumn(table, "K");
    const rhos = numericColumn(table, "rho");
    const rems = numericColumn(table, "remainder_proxy_norm");
    const x: number[] = [];
    const y: number[] = [];
    for (let i = 0; i < ks.length; i++) {
      if (ks[i] === k) {
        x.push(rhos[i]);
        y.push(rems[i]);
      }
    }
    return x.length ? fitLoglogSlope(x, y) : null;
  }
  if (name === "checkerboard_strictly_increasing") {
    const flux = numericColumn(
      readCsv(join(dir, "flux_growth_checkerboard.csv")),
      "flux_sigma",
    );
    return flux.every((v, i) => i === 0 || v > flux[i - 1]) ? 1 : 0;
  }
  if (name === "annulus_maxmin") {
    return maxOverMin(
      numericColumn(readCsv(join(dir, "flux_growth_annulus.csv")), "flux_sigma"),
    );
  }
  if (name === "ratio_maxmin") {
    return maxOverMin(numericColumn(readCsv(join(dir, "sigma_sweep.csv")), "ratio"));
  }
  if (name === "sqrt_sigma_maxmin") {
    return maxOverMin(
      numericColumn(readCsv(join(dir, "sigma_sweep.csv")), "sqrt_sigma_l2_minus"),
    );
  }
  if (name === "l2_minus_slope") {
    const table = readCsv(join(dir, "sigma_sweep.csv"));
    return fitLoglogSlope(numericColumn(table, "sigma"), numericColumn(table, "l2_minus"));
  }
  if (name === "energy_identities") {
    const table = readCsv(join(dir, "energy_identities.csv"));
    return Math.max(
      ...numericColumn(table, "real_identity_residual"),
      ...numericColumn(table, "imag_identity_residual"),
    );
  }
  if (name.startsWith("slope_m")) {
    const m = Number(name.slice("slope_m".length));
    const table = readCsv(join(dir, "skin_remainder.csv"));
    const ms = numericColumn(table, "m");
    const deltas = numericColumn(table, "delta");
    const rems = numericColumn(table, "weighted_remainder");
    const x: number[] = [];
    const y: number[] = [];
    for (let i = 0; i < ms.length; i++) {
      if (ms[i] === m) {
        x.push(deltas[i]);
        y.push(rems[i]);
      }
    }
    return x.length ? fitLoglogSlope(x, y) : null;
  }
  return null;
}

/** Python's %g-style float used in backend file names (e.g. 1000, 0.01). */
export function formatG(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e6 || Math.abs(v) < 1e-4)) {
    const s = v.toExponential().replace("e", "e");
    // match printf %g: 1e+06 style
    const [mant, exp] = s.split("e");
    const e = Number(exp);
    const sign = e < 0 ? "-" : "+";
    const padded = String(Math.abs(e)).padStart(2, "0");
    return `${mant}e${sign}${padded}`;
  }
  return String(v);
}

export interface RegressionResult {
  checked: string[];
  mismatches: { name: string; stored: number; recomputed: number }[];
}

export function dataLayerRegression(dir: string, manifest: Manifest): RegressionResult {
  if (!existsSync(dir)) {
    throw new SchemaError(`no such artifact directory ${dir}`);
  }
  const checked: string[] = [];
  const mismatches: RegressionResult["mismatches"] = [];
  for (const [name, spec] of Object.entries(manifest.predicates)) {
    const value = recomputePredicate(dir, manifest, name);
    if (value === null || spec.value === null) continue;
    checked.push(name);
    if (Math.abs(value - spec.value) > 1e-12) {
      mismatches.push({ name, stored: spec.value, recomputed: value });
    }
  }
  return { checked, mismatches };
}
