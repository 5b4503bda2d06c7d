"""Command-line entry point.

Exit codes: 0 success, 2 precondition/config error, 3 solver error,
4 failed acceptance predicate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, fem, mesh as mesh_mod, oracle, \
    powerseries, transmission
from .errors import (CompatibilityError, ConfigError, ContrastlabError,
                     ConvergenceError, GeometryError, IntegrityError,
                     MeshFormatError, OracleRefusalError, ResolutionError,
                     SchemaError, SingularMatrixError, SingularSystemError,
                     SolverError, UnsupportedGeometryError)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_SOLVER = 3
EXIT_PREDICATE = 4

_PRECONDITION_ERRORS = (CompatibilityError, ConfigError, GeometryError,
                        IntegrityError, MeshFormatError, ResolutionError,
                        SchemaError, UnsupportedGeometryError, ValueError)
_SOLVER_ERRORS = (ConvergenceError, OracleRefusalError, SingularMatrixError,
                  SingularSystemError, SolverError)


def _build_mesh(args):
    if args.mesh:
        return mesh_mod.read_mesh(args.mesh)
    if args.kind == "annulus":
        return mesh_mod.build_annulus(args.r_sigma, args.r_outer, args.levels)
    if args.kind == "checkerboard":
        return mesh_mod.build_square_checkerboard(args.half_width, args.levels)
    raise ConfigError(f"cannot build mesh kind {args.kind!r}")


def _mesh_args(sub):
    sub.add_argument("--mesh", help="read a contrastlab-mesh v1 file")
    sub.add_argument("--kind", default="annulus",
                     choices=["annulus", "checkerboard"])
    sub.add_argument("--r-sigma", type=float, default=1.0, dest="r_sigma")
    sub.add_argument("--r-outer", type=float, default=2.0, dest="r_outer")
    sub.add_argument("--half-width", type=float, default=1.0,
                     dest="half_width")
    sub.add_argument("--levels", type=int, default=2)


def _out_dir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_field(field, path):
    with open(path, "w") as fh:
        for i, v in enumerate(field.coeffs):
            fh.write(f"{i} {v.real:.17g} {v.imag:.17g}\n")


def _report_dict(report):
    return {k: getattr(report, k) for k in
            ("l2_plus", "l2_minus", "h1_plus", "h1_minus", "l2_sigma",
             "h1_sigma", "flux_l2_sigma")}


def cmd_mesh(args):
    m = _build_mesh(args)
    mesh_mod.validate_mesh(m)
    out = _out_dir(args)
    mesh_mod.write_mesh(m, out / "mesh.txt")
    info = {"nodes": m.n_nodes, "triangles": m.n_triangles,
            "h_max": m.h_max, "sha256": mesh_mod.mesh_sha256(m)}
    print(json.dumps(info))
    return EXIT_OK


def cmd_solve(args):
    m = _build_mesh(args)
    prob = transmission.TransmissionProblem(
        bc=args.bc, a_plus=complex(args.a_plus), a_minus=complex(args.a_minus),
        f=experiments.resolve_data(args.f, "f", m),
        g=experiments.resolve_data(args.g, "g", m),
        variant=args.variant)
    phi = transmission.solve_direct(prob, m)
    rep = fem.norms(phi)
    out = _out_dir(args)
    _write_field(phi, out / "solution.txt")
    payload = _report_dict(rep)
    if args.format == "json":
        (out / "norms.json").write_text(json.dumps(payload, indent=1) + "\n")
    else:
        cols = ",".join(payload)
        vals = ",".join(f"{v:.17g}" for v in payload.values())
        (out / "norms.csv").write_text(cols + "\n" + vals + "\n")
    print(json.dumps(payload))
    return EXIT_OK


def cmd_series(args):
    m = _build_mesh(args)
    prob = transmission.TransmissionProblem(
        bc=args.bc, a_plus=complex(args.a_plus),
        a_minus=complex(args.rho) * complex(args.a_plus),
        f=experiments.resolve_data(args.f, "f", m),
        g=experiments.resolve_data(args.g, "g", m),
        variant=args.variant)
    run = powerseries.run_series(prob, m, K_max=args.k_max, tol=args.tol)
    out = _out_dir(args)
    (out / "series.csv").write_text(powerseries.series_csv_text(run))
    direct = transmission.solve_direct(prob, m)
    table = powerseries.compare_to_direct(run, direct)
    rows = [(r.order, prob.rho, r.remainder_proxy) for r in table]
    (out / "remainder.csv").write_text(powerseries.remainder_csv_text(rows))
    summary = {"regime": run.regime, "status": run.status,
               "terms": len(run.terms), "alpha_hat": run.alpha_hat}
    print(json.dumps(summary))
    return EXIT_OK


def cmd_campaign(args):
    config = experiments.load_config(args.config)
    jobs = args.jobs or int(os.environ.get("CONTRASTLAB_JOBS", "1"))
    config.setdefault("jobs", jobs)
    result = experiments.run_campaign(config, args.out)
    status = {"campaign": result.campaign, "pass": result.passed,
              "out": str(result.out_dir),
              "predicates": {p.name: p.passed() for p in result.predicates}}
    print(json.dumps(status))
    return EXIT_OK if result.passed else EXIT_PREDICATE


def cmd_verify(args):
    report = experiments.verify_manifest(args.artifact)
    print(json.dumps({"pass": report.passed,
                      "hash_mismatches": report.hash_mismatches,
                      "predicates": report.predicate_results}))
    return EXIT_OK if report.passed else EXIT_PREDICATE


def cmd_oracle(args):
    if args.problem == "transmission":
        rho = None if args.rho is None else complex(args.rho)
        sol = oracle.radial_transmission(
            args.mode, rho, args.bc, g_amplitude=args.g_amplitude,
            r_sigma=args.r_sigma, r_outer=args.r_outer)
    else:
        jp = experiments.resolve_data(args.j, "j", None)
        j_plus = (lambda r: jp[0](r, np.zeros_like(r))) if jp else (lambda r: 0 * r)
        zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        sol = oracle.radial_tm(args.mode, args.omega, args.sigma,
                               (j_plus, zero), r_sigma=args.r_sigma,
                               r_outer=args.r_outer,
                               breakpoints=(1.2, 1.8))
    out = _out_dir(args)
    oracle.write_profile_csv(sol, out / "profile.csv")
    print(json.dumps({"mode": sol.mode, "method": sol.method,
                      "richardson_rel": sol.richardson_rel}))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="contrastlab",
        description="High-contrast transmission laboratory: meshes, direct "
                    "and power-series solves, TM skin-effect studies, "
                    "reproducible campaigns.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="build and export a mesh")
    _mesh_args(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("solve", help="direct transmission solve")
    _mesh_args(p)
    p.add_argument("--bc", default="neumann",
                   choices=["neumann", "dirichlet"])
    p.add_argument("--a-plus", default="1", dest="a_plus")
    p.add_argument("--a-minus", default="1000", dest="a_minus")
    p.add_argument("--f", default="zero")
    p.add_argument("--g", default="cos_theta")
    p.add_argument("--variant", default="standard",
                   choices=["standard", "modified"])
    p.add_argument("--out", default=".")
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("series", help="power-series solve and comparison")
    _mesh_args(p)
    p.add_argument("--bc", default="neumann",
                   choices=["neumann", "dirichlet"])
    p.add_argument("--a-plus", default="1", dest="a_plus")
    p.add_argument("--rho", default="1000")
    p.add_argument("--f", default="zero")
    p.add_argument("--g", default="cos_theta")
    p.add_argument("--variant", default="standard",
                   choices=["standard", "modified"])
    p.add_argument("--k-max", type=int, default=40, dest="k_max")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("campaign", help="run a campaign from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("verify", help="re-check a campaign artifact")
    p.add_argument("--artifact", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="radial reference solutions")
    p.add_argument("--problem", default="transmission",
                   choices=["transmission", "tm"])
    p.add_argument("--mode", type=int, default=1)
    p.add_argument("--rho", default=None)
    p.add_argument("--bc", default="neumann",
                   choices=["neumann", "dirichlet"])
    p.add_argument("--g-amplitude", type=float, default=1.0,
                   dest="g_amplitude")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1e4)
    p.add_argument("--j", default="ring_indicator")
    p.add_argument("--r-sigma", type=float, default=1.0, dest="r_sigma")
    p.add_argument("--r-outer", type=float, default=2.0, dest="r_outer")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_PRECONDITION
    try:
        return args.func(args)
    except _PRECONDITION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ContrastlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
