"""Scalar transmission problems: definition, compatibility, direct solve.

Two variants are supported. In the ``standard`` problem the interface datum
enters the right-hand side with the coefficient difference; in the
``modified`` problem the coefficient in front of the interface integral is 1,
which weakens the required compatibility conditions to a single combined
integral (Neumann) or nothing (Dirichlet).

The interface normal points from the minus into the plus subdomain, and the
strong interface condition solved here is
``a_plus du+/dn - a_minus du-/dn = (a_plus - a_minus) g`` (standard variant),
equivalently ``du+/dn - rho du-/dn = (1 - rho) g`` after normalization.
In the discrete variational form this convention puts the factor
``(a_minus - a_plus)`` in front of the interface load.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import fem
from .errors import CompatibilityError, ContrastlabError

COMPAT_RTOL = 1e-10


@dataclass
class TransmissionProblem:
    bc: str                      # 'dirichlet' | 'neumann'
    a_plus: complex = 1.0
    a_minus: complex = 1.0
    f: object = None             # domain data, see fem data conventions
    g: object = None             # interface data
    variant: str = "standard"    # 'standard' | 'modified'

    def __post_init__(self):
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown bc {self.bc!r}")
        if self.variant not in ("standard", "modified"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.a_plus == 0:
            raise ValueError("a_plus must be nonzero")

    @property
    def rho(self):
        return complex(self.a_minus) / complex(self.a_plus)

    def with_rho(self, rho):
        """Same data, minus coefficient set to rho * a_plus."""
        return replace(self, a_minus=rho * complex(self.a_plus))

    def interface_scale(self):
        if self.variant == "standard":
            return complex(self.a_minus) - complex(self.a_plus)
        return 1.0 + 0.0j


@dataclass
class CompatibilityReport:
    satisfied: bool
    residuals: dict
    condition: str


def _data_integrals(problem, mesh):
    int_f = complex(np.sum(fem.assemble_domain_load(mesh, problem.f)))
    int_g = complex(np.sum(fem.assemble_interface_load(mesh, problem.g)))
    scale_f = fem.data_l2_domain(mesh, problem.f) * np.sqrt(
        mesh.subdomain_area("plus") + mesh.subdomain_area("minus"))
    scale_g = fem.data_l2_sigma(mesh, problem.g) * np.sqrt(
        max(mesh.interface_perimeter(), 1e-300))
    return int_f, int_g, scale_f, scale_g


def check_compatibility(problem, mesh):
    """Evaluate the integral conditions for the problem's variant and bc.

    Integrals use the same quadrature as the assembly, so data that is
    compatible at the discrete level passes exactly.
    """
    int_f, int_g, scale_f, scale_g = _data_integrals(problem, mesh)
    residuals = {
        "domain_integral": abs(int_f),
        "interface_integral": abs(int_g),
        "combined": abs(-int_f + int_g),
    }
    tol_f = COMPAT_RTOL * max(scale_f, 1e-300)
    tol_g = COMPAT_RTOL * max(scale_g, 1e-300)
    tol_c = COMPAT_RTOL * max(scale_f + scale_g, 1e-300)
    if problem.variant == "standard":
        if problem.bc == "neumann":
            ok = abs(int_f) <= tol_f and abs(int_g) <= tol_g
            condition = "int_Omega f = 0 and int_Sigma g = 0"
        else:
            ok = abs(int_g) <= tol_g
            condition = "int_Sigma g = 0"
    else:
        if problem.bc == "neumann":
            ok = abs(-int_f + int_g) <= tol_c
            condition = "-int_Omega f + int_Sigma g = 0"
        else:
            ok = True
            condition = "none"
    return CompatibilityReport(bool(ok), residuals, condition)


def assemble_rhs(problem, mesh):
    """Right-hand side: -(f, v) + interface_scale * (g, v)_Sigma."""
    b = -fem.assemble_domain_load(mesh, problem.f)
    b = b + fem.assemble_interface_load(mesh, problem.g,
                                        scale=problem.interface_scale())
    return b


def solve_direct(problem, mesh):
    """Monolithic solve of the transmission problem on the full mesh."""
    report = check_compatibility(problem, mesh)
    if not report.satisfied:
        raise CompatibilityError(
            f"data violates {report.condition} "
            f"(residuals {report.residuals})", residuals=report.residuals)
    ops = fem.operators(mesh)
    a = (complex(problem.a_plus) * ops.stiffness("plus")
         + complex(problem.a_minus) * ops.stiffness("minus"))
    b = assemble_rhs(problem, mesh)
    system = fem.LinearSystem(a, b, mesh)
    if problem.bc == "neumann":
        system = fem.constrain(system, "neumann_pure")
        system = fem.constrain(system, "zero_mean")
    else:
        system = fem.constrain(system, "dirichlet_exterior")
    coeffs = fem.solve_system(system)
    return fem.ScalarField(mesh, coeffs)


def data_norm(problem, mesh, kind="standard"):
    """Right-hand-side size used in the monitored uniformity ratio.

    ``standard``: |a+|^-1 ||f|| + ||g||;  ``symmetric``: the variant where
    both coefficients enter, ||f-||/|a-| + ||f+||/|a+| + ||g||;
    ``modified``: |a+|^-1 (||f|| + ||g||).
    """
    norm_g = fem.data_l2_sigma(mesh, problem.g)
    if kind == "symmetric":
        fp, fm = fem.data_pair(problem.f)
        norm_fp = fem.data_l2_domain(mesh, (fp, None))
        norm_fm = fem.data_l2_domain(mesh, (None, fm))
        return (norm_fm / abs(problem.a_minus) if problem.a_minus else 0.0) \
            + norm_fp / abs(problem.a_plus) + norm_g
    norm_f = fem.data_l2_domain(mesh, problem.f)
    if kind == "modified":
        return (norm_f + norm_g) / abs(problem.a_plus)
    return norm_f / abs(problem.a_plus) + norm_g


@dataclass
class SweepRow:
    rho: complex
    report: fem.NormReport
    data_norm: float
    ratio: object          # float, or None when 0/0


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def ratios(self):
        return [r.ratio for r in self.rows if r.ratio is not None]

    def max_over_min_ratio(self):
        vals = self.ratios()
        if not vals:
            return None
        return max(vals) / min(vals)


def sweep_uniformity(problem, rho_values, mesh, ratio_kind=None, jobs=1):
    """Solve for each rho and monitor the proxy-norm / data-norm ratio."""
    if ratio_kind is None:
        ratio_kind = "modified" if problem.variant == "modified" else "standard"

    def one(rho):
        prob = problem.with_rho(rho)
        try:
            phi = solve_direct(prob, mesh)
        except ContrastlabError as exc:
            raise type(exc)(f"rho={rho}: {exc}") from exc
        rep = fem.norms(phi)
        dn = data_norm(prob, mesh, kind=ratio_kind)
        ratio = None
        if dn > 0:
            ratio = rep.proxy_total() / dn
        elif rep.proxy_total() > 0:
            ratio = float("inf")
        return SweepRow(complex(rho), rep, dn, ratio)

    rho_values = list(rho_values)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, rho_values))
    else:
        rows = [one(r) for r in rho_values]
    return SweepResult(rows)


SWEEP_CSV_COLUMNS = ("rho_re,rho_im,l2_plus,l2_minus,h1_plus,h1_minus,"
                     "l2_sigma,h1_sigma,flux_sigma,data_norm,ratio")


def sweep_csv_text(result):
    lines = [SWEEP_CSV_COLUMNS]
    for row in result.rows:
        rep = row.report
        ratio = "" if row.ratio is None else f"{row.ratio:.17g}"
        lines.append(
            f"{row.rho.real:.17g},{row.rho.imag:.17g},{rep.l2_plus:.17g},"
            f"{rep.l2_minus:.17g},{rep.h1_plus:.17g},{rep.h1_minus:.17g},"
            f"{rep.l2_sigma:.17g},{rep.h1_sigma:.17g},"
            f"{rep.flux_l2_sigma:.17g},{row.data_norm:.17g},{ratio}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(result, path):
    with open(path, "w") as fh:
        fh.write(sweep_csv_text(result))
