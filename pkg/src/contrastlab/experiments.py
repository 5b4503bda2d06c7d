"""Campaign definitions: every checkable claim as a reproducible artifact.

A campaign takes a config (TOML file or dict), runs the referenced solves,
writes CSV tables plus a versioned JSON manifest (schema
``contrastlab-manifest-v1``) with content checksums and pass/fail predicates,
and returns the result. ``verify_manifest`` re-derives the cheap predicates
(slope fits, ratio bounds, monotonicity) from the stored CSVs without
re-running any physics.

Campaign ids: uniformity, series, limit_rate, symmetric, modified,
checkerboard, maxwell_uniform, skin.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import fem, helmholtz, mesh as mesh_mod, powerseries, transmission
from .errors import ConfigError, IntegrityError, SchemaError

MANIFEST_SCHEMA = "contrastlab-manifest-v1"
MANIFEST_NAME = "manifest.json"

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


# ---------------------------------------------------------------------------
# config handling

def load_config(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def _require(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"missing {key!r} in {where}")
    return cfg[key]


def build_geometry(geo):
    kind = _require(geo, "kind", "geometry")
    if kind == "annulus":
        return mesh_mod.build_annulus(
            _require(geo, "r_sigma", "geometry"),
            _require(geo, "r_outer", "geometry"),
            int(geo.get("levels", 0)))
    if kind == "annulus_graded":
        return mesh_mod.build_annulus_graded(
            _require(geo, "r_sigma", "geometry"),
            _require(geo, "r_outer", "geometry"),
            h_sigma=_require(geo, "h_sigma", "geometry"),
            h_coarse=_require(geo, "h_coarse", "geometry"),
            growth=geo.get("growth", 1.3),
            h_arc=geo.get("h_arc"))
    if kind == "checkerboard":
        return mesh_mod.build_square_checkerboard(
            _require(geo, "half_width", "geometry"), int(geo.get("levels", 0)))
    if kind == "square_polygon":
        return mesh_mod.build_square_polygon(
            _require(geo, "half_width", "geometry"),
            _require(geo, "polygon", "geometry"),
            _require(geo, "h_target", "geometry"))
    raise ConfigError(f"unknown geometry kind {kind!r}")


# named data presets; some need mesh-dependent constants
def _g_cos_theta(x, y):
    r = np.hypot(x, y)
    return x / np.where(r > 0, r, 1.0)


def _g_cos_2theta(x, y):
    r2 = x * x + y * y
    return (x * x - y * y) / np.where(r2 > 0, r2, 1.0)


def _ring_indicator(x, y):
    r = np.hypot(x, y)
    return ((r > 1.2) & (r < 1.8)).astype(float)


def _ring_bump(x, y):
    r = np.hypot(x, y)
    s = np.clip((r - 1.2) / 0.6, 0.0, 1.0)
    return np.where((r > 1.2) & (r < 1.8), np.sin(np.pi * s) ** 2, 0.0)


def resolve_data(name, kind, mesh):
    """Resolve a named preset into assembly-ready data."""
    if name in (None, "zero"):
        return None
    if kind == "f":
        if name == "one":
            return 1.0
        if name == "xy":
            return lambda x, y: x * y
        if name == "one_minus":
            return (None, 1.0)
        if name == "balance_g_one":
            # constant chosen so that -int f + int g = 0 with g = 1
            area = mesh.subdomain_area("plus") + mesh.subdomain_area("minus")
            c = mesh.interface_perimeter() / area
            return (lambda x, y: c * np.ones_like(x),
                    lambda x, y: c * np.ones_like(x))
    if kind == "g":
        if name == "one":
            return 1.0
        if name == "one_plus_cos":
            return lambda x, y: 1.0 + _g_cos_theta(x, y)
        if name == "x_gauss_origin":
            # odd, concentrated at the origin: probes the checkerboard cross
            return lambda x, y: x * np.exp(-(x * x + y * y) / 0.01)
        if name == "cos_theta":
            return _g_cos_theta
        if name == "cos_2theta":
            return _g_cos_2theta
        if name == "x_plus_y":
            return lambda x, y: x + y
    if kind == "j":
        if name == "ring_indicator":
            return (_ring_indicator, None)
        if name == "ring_bump":
            return (_ring_bump, None)
    raise ConfigError(f"unknown {kind} preset {name!r}")


# ---------------------------------------------------------------------------
# manifest plumbing

def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


class Predicate:
    def __init__(self, name, value, target, tol, op):
        self.name = name
        self.value = value
        self.target = target
        self.tol = tol
        self.op = op

    def passed(self):
        if self.value is None or not np.isfinite(self.value):
            return False
        if self.op == "abs_le":        # |value - target| <= tol
            return abs(self.value - self.target) <= self.tol
        if self.op == "le":            # value <= target
            return self.value <= self.target
        if self.op == "ge":
            return self.value >= self.target
        if self.op == "true":          # boolean encoded as 1.0/0.0
            return self.value == 1.0
        raise ValueError(f"unknown predicate op {self.op!r}")

    def as_dict(self):
        return {"value": self.value, "target": self.target, "tol": self.tol,
                "op": self.op, "pass": bool(self.passed())}


class CampaignResult:
    def __init__(self, campaign, out_dir, predicates, parameters,
                 mesh_hashes, wall_clock):
        self.campaign = campaign
        self.out_dir = Path(out_dir)
        self.predicates = predicates
        self.parameters = parameters
        self.mesh_hashes = mesh_hashes
        self.wall_clock = wall_clock

    @property
    def passed(self):
        return all(p.passed() for p in self.predicates)

    def write_manifest(self, config):
        files = {}
        for p in sorted(self.out_dir.glob("*.csv")):
            files[p.name] = _sha256_file(p)
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "campaign": self.campaign,
            "pass": bool(self.passed),
            "config": config,
            "parameters": self.parameters,
            "mesh_hashes": self.mesh_hashes,
            "files": files,
            "predicates": {p.name: p.as_dict() for p in self.predicates},
            "wall_clock_s": self.wall_clock,
        }
        with open(self.out_dir / MANIFEST_NAME, "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return manifest


def _fit_slope(x, y):
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    xbar, ybar = x.mean(), y.mean()
    return float(((x - xbar) @ (y - ybar)) / ((x - xbar) @ (x - xbar)))


def _write(out_dir, name, text):
    with open(Path(out_dir) / name, "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# individual campaigns

def _problem_from_config(cfg, mesh, variant="standard", bc=None):
    data = cfg.get("data", {})
    phys = cfg.get("physics", {})
    if bc is None:
        bc = phys.get("bc", "neumann")
    if isinstance(bc, list):
        bc = bc[0]
    return transmission.TransmissionProblem(
        bc=bc,
        a_plus=phys.get("a_plus", 1.0),
        a_minus=phys.get("a_plus", 1.0),   # per-rho value set by sweeps
        f=resolve_data(data.get("f", "zero"), "f", mesh),
        g=resolve_data(data.get("g", "cos_theta"), "g", mesh),
        variant=variant)


def _rho_list(cfg):
    rho = _require(cfg.get("physics", {}), "rho", "physics")
    if isinstance(rho, (int, float)):
        rho = [rho]
    if not rho:
        raise ConfigError("empty rho sweep list")
    return [float(r) for r in rho]


def campaign_uniformity(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    rhos = _rho_list(cfg)
    phys = cfg.get("physics", {})
    bcs = phys.get("bc", ["neumann", "dirichlet"])
    if isinstance(bcs, str):
        bcs = [bcs]
    args_deg = phys.get("arg_rho_degrees", [0])
    if isinstance(args_deg, (int, float)):
        args_deg = [args_deg]
    predicates = []
    params = {}
    for bc in bcs:
        for arg in args_deg:
            prob = _problem_from_config(cfg, geo_mesh, bc=bc)
            phase = np.exp(1j * math.radians(arg))
            values = [r * phase for r in rhos]
            result = transmission.sweep_uniformity(prob, values, geo_mesh,
                                                   jobs=int(cfg.get("jobs", 1)))
            name = f"sweep_{bc}_arg{int(arg)}"
            _write(out_dir, name + ".csv", transmission.sweep_csv_text(result))
            mm = result.max_over_min_ratio()
            predicates.append(Predicate(f"maxmin_{bc}_arg{int(arg)}",
                                        mm, 2.0, 0.0, "le"))
            params[f"ratios_{bc}_arg{int(arg)}"] = [r.ratio for r in result.rows]
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


def _series_predicates(prefix, problem, rhos, geo_mesh, series_cfg,
                       out_dir, predicates, params):
    """Shared by series / symmetric / modified campaigns."""
    k_max = int(series_cfg.get("K_max", 40))
    tol = float(series_cfg.get("tol", 1e-12))
    remainder_rows = []
    for rho in rhos:
        prob = problem.with_rho(rho)
        direct = transmission.solve_direct(prob, geo_mesh)
        run = powerseries.run_series(prob, geo_mesh, K_max=k_max, tol=tol)
        _write(out_dir, f"{prefix}series_rho{abs(rho):g}.csv",
               powerseries.series_csv_text(run))
        table = powerseries.compare_to_direct(run, direct)
        direct_proxy = fem.norms(direct).proxy_total()
        for row in table:
            remainder_rows.append((row.order, rho, row.remainder_proxy))
        rel = table[-1].remainder_proxy / direct_proxy
        predicates.append(Predicate(f"{prefix}equiv_rho{abs(rho):g}",
                                    rel, 1e-8, 0.0, "le"))
        proxies = [r.proxy_total() for r in run.term_norms]
        ratios = [proxies[k] / proxies[k - 1]
                  for k in range(max(2, len(proxies) - 5), len(proxies))
                  if proxies[k - 1] > 0]
        dev = max(abs(r / run.alpha_hat - 1.0) for r in ratios) \
            if ratios and run.alpha_hat > 0 else 0.0
        predicates.append(Predicate(f"{prefix}geometric_rho{abs(rho):g}",
                                    dev, 0.0, 0.10, "abs_le"))
        params[f"{prefix}alpha_hat_rho{abs(rho):g}"] = run.alpha_hat
        params[f"{prefix}rho0_empirical_rho{abs(rho):g}"] = run.rho0_empirical()
        params[f"{prefix}direct_proxy_rho{abs(rho):g}"] = direct_proxy
        params[f"{prefix}status_rho{abs(rho):g}"] = run.status
    _write(out_dir, f"{prefix}remainder.csv",
           powerseries.remainder_csv_text(remainder_rows))


def campaign_series(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    predicates, params = [], {}
    prob = _problem_from_config(cfg, geo_mesh)
    _series_predicates("", prob, _rho_list(cfg), geo_mesh,
                       cfg.get("series", {}), out_dir, predicates, params)
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


def campaign_limit_rate(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    prob = _problem_from_config(cfg, geo_mesh)
    series_cfg = cfg.get("series", {})
    k_max = int(series_cfg.get("K_max", 40))
    tol = float(series_cfg.get("tol", 1e-13))
    windows = cfg.get("windows", {
        "0": [1e2, 1e3, 1e4, 1e5],
        "1": [1e2, 1e3, 1e4, 1e5],
        "2": [10 ** 1.5, 1e2, 10 ** 2.5, 1e3],
    })
    tolerances = {0: 0.10, 1: 0.15, 2: 0.15}
    all_rhos = sorted({r for lst in windows.values() for r in lst})
    tables = {}
    for rho in all_rhos:
        p = prob.with_rho(rho)
        direct = transmission.solve_direct(p, geo_mesh)
        run = powerseries.run_series(p, geo_mesh, K_max=k_max, tol=tol)
        tables[rho] = [r.remainder_proxy
                       for r in powerseries.compare_to_direct(run, direct)]
    rows = []
    predicates, params = [], {}
    for k_str, rhos in windows.items():
        k = int(k_str)
        rems = [tables[r][k] for r in rhos]
        for rho, rem in zip(rhos, rems):
            rows.append((k, rho, rem))
        slope = powerseries.fit_remainder_slope(rhos, rems)
        predicates.append(Predicate(f"slope_K{k}", slope, -(k + 1),
                                    tolerances.get(k, 0.15), "abs_le"))
        params[f"slope_K{k}"] = slope
        if len(rhos) >= 3:
            params[f"slope_window_K{k}"] = powerseries.fit_remainder_slope(
                rhos[-3:], rems[-3:])
    rows.sort(key=lambda t: (t[0], t[1]))
    _write(out_dir, "remainder.csv", powerseries.remainder_csv_text(rows))
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


def campaign_symmetric(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    predicates, params = [], {}
    prob = _problem_from_config(cfg, geo_mesh)
    rhos = _rho_list(cfg)                      # small moduli: |rho| < 1
    _series_predicates("", prob, rhos, geo_mesh, cfg.get("series", {}),
                       out_dir, predicates, params)
    sweep_rhos = cfg.get("physics", {}).get("rho_sweep",
                                            [10 ** -k for k in range(1, 7)])
    result = transmission.sweep_uniformity(prob, sweep_rhos, geo_mesh,
                                           ratio_kind="symmetric",
                                           jobs=int(cfg.get("jobs", 1)))
    _write(out_dir, "sweep_symmetric.csv", transmission.sweep_csv_text(result))
    predicates.append(Predicate("maxmin_symmetric",
                                result.max_over_min_ratio(), 2.0, 0.0, "le"))
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


def campaign_modified(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    predicates, params = [], {}
    data = cfg.get("data", {})
    g = resolve_data(data.get("g", "one_plus_cos"), "g", geo_mesh)
    if data.get("f", "balance") == "balance":
        # constant source balancing the interface integral: the combined
        # condition -int f + int g = 0 holds while the standard ones fail
        g_int = complex(np.sum(fem.assemble_interface_load(geo_mesh, g))).real
        area = (geo_mesh.subdomain_area("plus")
                + geo_mesh.subdomain_area("minus"))
        c = g_int / area
        f = (lambda x, y: c * np.ones_like(x),
             lambda x, y: c * np.ones_like(x))
    else:
        f = resolve_data(data.get("f"), "f", geo_mesh)
    phys = cfg.get("physics", {})
    bc = phys.get("bc", "neumann")
    prob = transmission.TransmissionProblem(
        bc=bc if not isinstance(bc, list) else bc[0],
        a_plus=phys.get("a_plus", 1.0), a_minus=phys.get("a_plus", 1.0),
        f=f, g=g, variant="modified")
    _series_predicates("", prob, _rho_list(cfg), geo_mesh,
                       cfg.get("series", {}), out_dir, predicates, params)
    sweep_rhos = cfg.get("physics", {}).get("rho_sweep",
                                            [float(10 ** k) for k in range(1, 7)])
    result = transmission.sweep_uniformity(prob, sweep_rhos, geo_mesh,
                                           ratio_kind="modified",
                                           jobs=int(cfg.get("jobs", 1)))
    _write(out_dir, "sweep_modified.csv", transmission.sweep_csv_text(result))
    predicates.append(Predicate("maxmin_modified",
                                result.max_over_min_ratio(), 2.0, 0.0, "le"))
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


def _flux_growth_table(kind, geo, levels, problem_template, rho):
    rows = []
    hashes = {}
    for level in levels:
        if kind == "checkerboard":
            m = mesh_mod.build_square_checkerboard(
                geo.get("half_width", 1.0), level)
        else:
            m = mesh_mod.build_annulus(geo.get("r_sigma", 1.0),
                                       geo.get("r_outer", 2.0), level)
        prob = transmission.TransmissionProblem(
            bc=problem_template.bc, a_plus=problem_template.a_plus,
            a_minus=rho * complex(problem_template.a_plus),
            f=resolve_data(problem_template.f, "f", m)
            if isinstance(problem_template.f, str) else problem_template.f,
            g=resolve_data(problem_template.g, "g", m)
            if isinstance(problem_template.g, str) else problem_template.g,
            variant="standard")
        phi = transmission.solve_direct(prob, m)
        rep = fem.norms(phi)
        rows.append((level, m.h_max, rep.flux_l2_sigma))
        hashes[f"{kind}_level{level}"] = mesh_mod.mesh_sha256(m)
    return rows, hashes


def campaign_checkerboard(cfg, out_dir):
    phys = cfg.get("physics", {})
    rho = float(phys.get("rho", 1e4))
    bc = phys.get("bc", "dirichlet")
    levels = list(cfg.get("levels", [0, 1, 2, 3, 4]))
    data = cfg.get("data", {})
    template = transmission.TransmissionProblem(
        bc=bc, f=data.get("f", "zero"), g=data.get("g", "x_gauss_origin"))
    annulus_template = transmission.TransmissionProblem(
        bc=bc, f="zero", g=data.get("g_annulus", "cos_theta"))
    geo = cfg.get("geometry", {})
    checker_rows, hashes = _flux_growth_table("checkerboard", geo, levels,
                                              template, rho)
    annulus_rows, h2 = _flux_growth_table("annulus", geo, levels,
                                          annulus_template, rho)
    hashes.update(h2)

    def table_text(rows):
        lines = ["level,h_max,flux_sigma"]
        for lv, h, fx in rows:
            lines.append(f"{lv},{h:.17g},{fx:.17g}")
        return "\n".join(lines) + "\n"

    _write(out_dir, "flux_growth_checkerboard.csv", table_text(checker_rows))
    _write(out_dir, "flux_growth_annulus.csv", table_text(annulus_rows))
    cb_flux = [r[2] for r in checker_rows]
    an_flux = [r[2] for r in annulus_rows]
    increasing = all(b > a for a, b in zip(cb_flux, cb_flux[1:]))
    predicates = [
        Predicate("checkerboard_strictly_increasing",
                  1.0 if increasing else 0.0, 1.0, 0.0, "true"),
        Predicate("annulus_maxmin", max(an_flux) / min(an_flux),
                  1.5, 0.0, "le"),
    ]
    params = {"checkerboard_flux": cb_flux, "annulus_flux": an_flux,
              "rho": rho}
    return predicates, params, hashes


def campaign_maxwell_uniform(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    phys = cfg.get("physics", {})
    sigmas = phys.get("sigma", [10.0 ** k for k in range(2, 9)])
    if isinstance(sigmas, (int, float)):
        sigmas = [sigmas]
    omega = float(phys.get("omega", 1.0))
    bc = phys.get("bc", "insulating_analog")
    j = resolve_data(cfg.get("data", {}).get("j", "ring_bump"), "j", geo_mesh)
    prob = helmholtz.TmProblem(omega=omega, sigma=float(sigmas[0]), j=j)
    prob, probe = helmholtz.ensure_nonresonant(prob, geo_mesh, bc)
    rows = helmholtz.sigma_sweep(prob, [float(s) for s in sigmas], geo_mesh,
                                 bc=bc)
    _write(out_dir, "sigma_sweep.csv", helmholtz.sigma_csv_text(rows))
    lines = ["sigma,real_identity_residual,imag_identity_residual"]
    for r in rows:
        lines.append(f"{r.sigma:.17g},{r.energy.real_identity_residual:.17g},"
                     f"{r.energy.imag_identity_residual:.17g}")
    _write(out_dir, "energy_identities.csv", "\n".join(lines) + "\n")

    ratios = [r.ratio for r in rows]
    ss = [r.sqrt_sigma_l2_minus for r in rows]
    slope = _fit_slope([r.sigma for r in rows], [r.l2_minus for r in rows])
    max_resid = max(max(r.energy.real_identity_residual,
                        r.energy.imag_identity_residual) for r in rows)
    predicates = [
        Predicate("ratio_maxmin", max(ratios) / min(ratios), 2.0, 0.0, "le"),
        Predicate("sqrt_sigma_maxmin", max(ss) / min(ss), 3.0, 0.0, "le"),
        Predicate("l2_minus_slope", slope, -0.5, 0.1, "abs_le"),
        Predicate("energy_identities", max_resid, 1e-9, 0.0, "le"),
    ]
    params = {"resonance_probe": probe, "omega": prob.omega,
              "l2_minus_slope": slope}
    if len(rows) >= 3:
        params["l2_minus_slope_window"] = _fit_slope(
            [r.sigma for r in rows[-3:]], [r.l2_minus for r in rows[-3:]])
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


def campaign_skin(cfg, out_dir):
    geo_mesh = build_geometry(_require(cfg, "geometry"))
    phys = cfg.get("physics", {})
    deltas = phys.get("delta", [0.2, 0.1, 0.05, 0.025])
    omega = float(phys.get("omega", 1.0))
    bc = phys.get("bc", "insulating_analog")
    orders = cfg.get("orders", [0, 1])
    j = resolve_data(cfg.get("data", {}).get("j", "ring_bump"), "j", geo_mesh)
    prob = helmholtz.TmProblem.from_delta(omega, float(min(deltas)), j=j)
    prob, probe = helmholtz.ensure_nonresonant(prob, geo_mesh, bc)
    tolerances = {0: 0.3, 1: 0.4}
    studies = []
    predicates, params = [], {}
    for order in orders:
        study = helmholtz.remainder_delta_study(prob, int(order),
                                                [float(d) for d in deltas],
                                                geo_mesh, bc=bc)
        studies.append(study)
        predicates.append(Predicate(f"slope_m{order}", study.slope,
                                    order + 1, tolerances.get(order, 0.3),
                                    "abs_le"))
        params[f"slope_m{order}"] = study.slope
        params[f"slope_window_m{order}"] = study.slope_window
    params["resonance_probe"] = probe
    _write(out_dir, "skin_remainder.csv",
           helmholtz.remainder_csv_text(studies))
    return predicates, params, {"mesh": mesh_mod.mesh_sha256(geo_mesh)}


CAMPAIGNS = {
    "uniformity": campaign_uniformity,
    "series": campaign_series,
    "limit_rate": campaign_limit_rate,
    "symmetric": campaign_symmetric,
    "modified": campaign_modified,
    "checkerboard": campaign_checkerboard,
    "maxwell_uniform": campaign_maxwell_uniform,
    "skin": campaign_skin,
}


def run_campaign(config, out_dir=None):
    """Run one campaign; returns CampaignResult and writes the manifest."""
    if isinstance(config, (str, Path)):
        config = load_config(config)
    campaign = _require(config, "campaign")
    if campaign not in CAMPAIGNS:
        raise ConfigError(f"unknown campaign id {campaign!r}")
    out_dir = Path(out_dir or config.get("output_dir") or f"runs/{campaign}")
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    predicates, params, hashes = CAMPAIGNS[campaign](config, out_dir)
    wall = time.perf_counter() - t0
    result = CampaignResult(campaign, out_dir, predicates, params, hashes,
                            wall)
    result.write_manifest(config)
    return result


# ---------------------------------------------------------------------------
# verification from stored artifacts

def _read_csv(path):
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise IntegrityError(f"missing file {path}") from exc
    if not lines:
        raise IntegrityError(f"empty CSV {path}")
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise IntegrityError(f"corrupt CSV row in {path}: {ln!r}")
        rows.append(parts)
    return header, rows


def _col(header, rows, name, cast=float):
    if name not in header:
        raise SchemaError(f"missing column {name}")
    i = header.index(name)
    out = []
    for row in rows:
        out.append(cast(row[i]) if row[i] != "" else None)
    return out


def _recompute_predicates(campaign, manifest, out_dir):
    """Re-derive each predicate value from the stored CSVs."""
    preds = manifest["predicates"]
    recomputed = {}
    for name, spec in preds.items():
        value = None
        if campaign in ("uniformity",) and name.startswith("maxmin_"):
            suffix = name[len("maxmin_"):]
            header, rows = _read_csv(out_dir / f"sweep_{suffix}.csv")
            ratios = [v for v in _col(header, rows, "ratio") if v is not None]
            value = max(ratios) / min(ratios) if ratios else None
        elif name.startswith("maxmin_"):
            suffix = name[len("maxmin_"):]
            header, rows = _read_csv(out_dir / f"sweep_{suffix}.csv")
            ratios = [v for v in _col(header, rows, "ratio") if v is not None]
            value = max(ratios) / min(ratios) if ratios else None
        elif name.startswith("equiv_rho"):
            rho = float(name[len("equiv_rho"):])
            header, rows = _read_csv(out_dir / "remainder.csv")
            rhos = _col(header, rows, "rho")
            rems = _col(header, rows, "remainder_proxy_norm")
            ks = _col(header, rows, "K", cast=int)
            sel = [(k, r) for k, rh, r in zip(ks, rhos, rems)
                   if abs(rh - abs(rho)) <= 1e-9 * abs(rho)]
            direct = manifest["parameters"].get(f"direct_proxy_rho{rho:g}")
            if sel and direct:
                value = sel[-1][1] / direct
        elif name.startswith("geometric_rho"):
            rho = float(name[len("geometric_rho"):])
            header, rows = _read_csv(out_dir / f"series_rho{rho:g}.csv")
            ratios = [v for v in _col(header, rows, "cumulative_ratio")
                      if v is not None]
            window = ratios[max(1, len(ratios) - 5):]
            if window:
                alpha = float(np.exp(np.mean(np.log(window))))
                value = max(abs(r / alpha - 1.0) for r in window)
        elif name.startswith("slope_K"):
            k_want = int(name[len("slope_K"):])
            header, rows = _read_csv(out_dir / "remainder.csv")
            ks = _col(header, rows, "K", cast=int)
            rhos = _col(header, rows, "rho")
            rems = _col(header, rows, "remainder_proxy_norm")
            pts = [(rh, rm) for k, rh, rm in zip(ks, rhos, rems)
                   if k == k_want]
            if pts:
                value = powerseries.fit_remainder_slope(
                    [p[0] for p in pts], [p[1] for p in pts])
        elif name == "checkerboard_strictly_increasing":
            header, rows = _read_csv(out_dir / "flux_growth_checkerboard.csv")
            flux = _col(header, rows, "flux_sigma")
            value = 1.0 if all(b > a for a, b in zip(flux, flux[1:])) else 0.0
        elif name == "annulus_maxmin":
            header, rows = _read_csv(out_dir / "flux_growth_annulus.csv")
            flux = _col(header, rows, "flux_sigma")
            value = max(flux) / min(flux)
        elif name == "ratio_maxmin":
            header, rows = _read_csv(out_dir / "sigma_sweep.csv")
            ratios = _col(header, rows, "ratio")
            value = max(ratios) / min(ratios)
        elif name == "sqrt_sigma_maxmin":
            header, rows = _read_csv(out_dir / "sigma_sweep.csv")
            ss = _col(header, rows, "sqrt_sigma_l2_minus")
            value = max(ss) / min(ss)
        elif name == "l2_minus_slope":
            header, rows = _read_csv(out_dir / "sigma_sweep.csv")
            value = _fit_slope(_col(header, rows, "sigma"),
                               _col(header, rows, "l2_minus"))
        elif name == "energy_identities":
            header, rows = _read_csv(out_dir / "energy_identities.csv")
            value = max(max(_col(header, rows, "real_identity_residual")),
                        max(_col(header, rows, "imag_identity_residual")))
        elif name.startswith("slope_m"):
            m_want = int(name[len("slope_m"):])
            header, rows = _read_csv(out_dir / "skin_remainder.csv")
            ms = _col(header, rows, "m", cast=int)
            deltas = _col(header, rows, "delta")
            rems = _col(header, rows, "weighted_remainder")
            pts = [(d, r) for m, d, r in zip(ms, deltas, rems) if m == m_want]
            if pts:
                value = _fit_slope([p[0] for p in pts], [p[1] for p in pts])
        if value is not None:
            recomputed[name] = Predicate(name, float(value), spec["target"],
                                         spec["tol"], spec["op"])
    return recomputed


class VerifyReport:
    def __init__(self, passed, predicate_results, hash_mismatches):
        self.passed = passed
        self.predicate_results = predicate_results
        self.hash_mismatches = hash_mismatches


def verify_manifest(artifact_dir):
    """Re-check the stored predicates from the CSVs; no physics re-run."""
    out_dir = Path(artifact_dir)
    manifest_path = out_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise IntegrityError(f"no {MANIFEST_NAME} in {out_dir}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"corrupt manifest: {exc}") from exc
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"unknown manifest schema {manifest.get('schema')!r}")
    mismatches = []
    for name, digest in manifest.get("files", {}).items():
        path = out_dir / name
        if not path.exists():
            raise IntegrityError(f"missing artifact file {name}")
        if _sha256_file(path) != digest:
            mismatches.append(name)
    recomputed = _recompute_predicates(manifest["campaign"], manifest,
                                       out_dir)
    results = {name: p.as_dict() for name, p in recomputed.items()}
    passed = all(p.passed() for p in recomputed.values()) and bool(recomputed)
    return VerifyReport(passed, results, mismatches)
