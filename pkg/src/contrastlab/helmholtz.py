"""TM-polarized scalar reduction of the high-conductivity Maxwell problem.

The out-of-plane electric field u solves

    laplace(u) + kappa^2 alpha u = -i nu j,   alpha = 1 + (i/delta^2) 1_minus

with kappa = omega sqrt(eps0 mu0), nu = omega mu0, delta = sqrt(omega eps0 /
sigma). An insulating wall (tangential magnetic field vanishes) is the
natural condition du/dn = 0; a conducting wall (tangential electric field
vanishes) clamps u = 0.

``skin_expansion`` builds the two-term boundary-layer expansion on the
concentric-disk geometry: the limit field in the annulus (u = 0 on the
interface), and the first corrector pair (interior field with impedance-type
trace, exponential profile of the stretched depth inside the conductor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg as spla

from . import fem, sparse
from .errors import (ResolutionError, SingularMatrixError, SolverError,
                     UnsupportedGeometryError)


@dataclass
class TmProblem:
    omega: float
    sigma: float
    j: object = None
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def kappa(self):
        return self.omega * math.sqrt(self.eps0 * self.mu0)

    @property
    def nu(self):
        return self.omega * self.mu0

    @property
    def delta(self):
        return math.sqrt(self.omega * self.eps0 / self.sigma)

    @property
    def alpha_minus(self):
        # computed from sigma directly so that equivalent (sigma) and
        # (delta) parameterizations give bit-identical coefficients
        return 1.0 + 1j * self.sigma / (self.omega * self.eps0)

    @property
    def skin_depth(self):
        return math.sqrt(2.0 / (self.omega * self.mu0 * self.sigma))

    @classmethod
    def from_delta(cls, omega, delta, j=None, eps0=1.0, mu0=1.0):
        sigma = omega * eps0 / delta ** 2
        return cls(omega=omega, sigma=sigma, j=j, eps0=eps0, mu0=mu0)

    def with_sigma(self, sigma):
        return replace(self, sigma=sigma)


def _tm_matrix(problem, mesh):
    ops = fem.operators(mesh)
    k2 = problem.kappa ** 2
    return (ops.stiffness("plus") + ops.stiffness("minus")
            - k2 * ops.mass("plus")
            - k2 * complex(problem.alpha_minus) * ops.mass("minus"))


def solve_tm(problem, mesh, bc="insulating_analog"):
    """Discrete TM solve; bc selects the exterior wall type."""
    if bc not in ("insulating_analog", "conducting_analog"):
        raise ValueError(f"unknown bc {bc!r}")
    a = _tm_matrix(problem, mesh)
    b = 1j * problem.nu * fem.assemble_domain_load(mesh, problem.j)
    system = fem.LinearSystem(a, b, mesh)
    if bc == "conducting_analog":
        system = fem.constrain(system, "dirichlet_exterior")
    try:
        coeffs = fem.solve_system(system)
    except (SingularMatrixError, SolverError) as exc:
        raise SolverError(
            f"TM system near-singular ({exc}); omega={problem.omega} may sit "
            "near a resonance of the limit problem - shift omega and retry"
        ) from exc
    return fem.ScalarField(mesh, coeffs)


@dataclass
class EnergyReport:
    real_identity_residual: float
    imag_identity_residual: float
    sigma_weighted_norm: float
    grad_norm: float
    l2_norm: float
    l2_minus: float
    j_pairing: complex


def energy_identities(u, problem, mesh=None):
    """Check the two Galerkin energy identities of the discrete solution.

    Real part: ||grad u||^2 = kappa^2 ||u||^2 - nu Im(j, u).
    Imaginary part (divided by nu): sigma ||u||^2_{0,minus} = -Re(j, u).
    Both hold to roundoff when u came from solve_tm on the same problem.
    """
    mesh = mesh or u.mesh
    ops = fem.operators(mesh)
    c = u.coeffs
    k2 = problem.kappa ** 2
    grad2 = float(np.real(np.vdot(c, (ops.stiffness("plus")
                                      + ops.stiffness("minus")) @ c)))
    l2p2 = float(np.real(np.vdot(c, ops.mass("plus") @ c)))
    l2m2 = float(np.real(np.vdot(c, ops.mass("minus") @ c)))
    jv = fem.assemble_domain_load(mesh, problem.j)
    ju = complex(np.vdot(c, jv))          # (j, u) = int j conj(u)
    real_lhs = grad2
    real_rhs = k2 * (l2p2 + l2m2) - problem.nu * ju.imag
    scale_r = abs(real_lhs) + k2 * (l2p2 + l2m2) + abs(problem.nu * ju.imag)
    imag_lhs = problem.sigma * l2m2
    imag_rhs = -ju.real
    scale_i = abs(imag_lhs) + abs(ju.real)
    return EnergyReport(
        real_identity_residual=abs(real_lhs - real_rhs) / max(scale_r, 1e-300),
        imag_identity_residual=abs(imag_lhs - imag_rhs) / max(scale_i, 1e-300),
        sigma_weighted_norm=math.sqrt(problem.sigma) * math.sqrt(max(l2m2, 0.0)),
        grad_norm=math.sqrt(max(grad2, 0.0)),
        l2_norm=math.sqrt(max(l2p2 + l2m2, 0.0)),
        l2_minus=math.sqrt(max(l2m2, 0.0)),
        j_pairing=ju,
    )


@dataclass
class SigmaRow:
    sigma: float
    delta: float
    l2_all: float
    l2_minus: float
    h1_all: float
    sqrt_sigma_l2_minus: float
    j_l2: float
    j_hdiv: float
    ratio: float
    energy: EnergyReport


def sigma_sweep(problem, sigma_values, mesh, bc="insulating_analog"):
    """Solve per sigma and tabulate the uniform-estimate observables.

    The out-of-plane current is divergence free, so its H(div) norm equals
    its L2 norm; both columns are kept for schema compatibility.
    """
    j_l2 = fem.data_l2_domain(mesh, problem.j)
    rows = []
    for sig in sigma_values:
        prob = problem.with_sigma(float(sig))
        u = solve_tm(prob, mesh, bc=bc)
        rep = energy_identities(u, prob, mesh)
        ratio = rep.l2_norm / j_l2 if j_l2 > 0 else float("nan")
        rows.append(SigmaRow(
            sigma=float(sig), delta=prob.delta, l2_all=rep.l2_norm,
            l2_minus=rep.l2_minus, h1_all=rep.grad_norm,
            sqrt_sigma_l2_minus=rep.sigma_weighted_norm,
            j_l2=j_l2, j_hdiv=j_l2, ratio=ratio, energy=rep))
    return rows


SIGMA_CSV_COLUMNS = ("sigma,delta,l2_all,l2_minus,h1_all,"
                     "sqrt_sigma_l2_minus,j_l2,j_hdiv,ratio")


def sigma_csv_text(rows):
    lines = [SIGMA_CSV_COLUMNS]
    for r in rows:
        lines.append(
            f"{r.sigma:.17g},{r.delta:.17g},{r.l2_all:.17g},{r.l2_minus:.17g},"
            f"{r.h1_all:.17g},{r.sqrt_sigma_l2_minus:.17g},{r.j_l2:.17g},"
            f"{r.j_hdiv:.17g},{r.ratio:.17g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# non-resonance probe for the limit problem

def _limit_solver(problem, mesh, bc):
    ops = fem.operators(mesh)
    k2 = problem.kappa ** 2
    a = ops.stiffness("plus") - k2 * ops.mass("plus")
    plus_nodes = mesh.subdomain_nodes("plus")
    fixed = mesh.interface_nodes()
    if bc == "conducting_analog":
        fixed = np.union1d(fixed, mesh.boundary_nodes())
    a = a.tocsr()
    in_fixed = np.isin(plus_nodes, fixed)
    free = plus_nodes[~in_fixed]
    return a, free, fixed


def resonance_probe(problem, mesh, bc="insulating_analog"):
    """1-norm condition estimate of the limit (interface-clamped) operator."""
    a, free, _ = _limit_solver(problem, mesh, bc)
    a_ff = a[free][:, free].tocsc()
    lu = spla.splu(a_ff, permc_spec="COLAMD")
    op = spla.LinearOperator(a_ff.shape, matvec=lu.solve,
                             rmatvec=lambda x: lu.solve(x, trans="H"),
                             dtype=complex)
    norm_a = spla.onenormest(a_ff)
    norm_inv = spla.onenormest(op)
    return float(norm_a * norm_inv)


def ensure_nonresonant(problem, mesh, bc="insulating_analog",
                       threshold=1e8, max_shifts=5):
    """Shift omega by 1% until the limit-problem condition probe is sane."""
    prob = problem
    for _ in range(max_shifts):
        probe = resonance_probe(prob, mesh, bc)
        if probe < threshold:
            return prob, probe
        prob = replace(prob, omega=prob.omega * 1.01)
    raise SolverError(
        f"could not move omega away from resonance (probe {probe:.3e})")


# ---------------------------------------------------------------------------
# skin-effect expansion on concentric disks

def _annulus_radii(mesh):
    inodes = mesh.interface_nodes()
    r_iface = np.hypot(*mesh.nodes[inodes].T)
    r_sigma = float(r_iface.mean())
    if np.max(np.abs(r_iface - r_sigma)) > 1e-9 * r_sigma:
        raise UnsupportedGeometryError(
            "skin expansion needs the concentric-disk geometry")
    bnodes = mesh.boundary_nodes()
    r_bdry = np.hypot(*mesh.nodes[bnodes].T)
    r_outer = float(r_bdry.mean())
    if np.max(np.abs(r_bdry - r_outer)) > 1e-9 * r_outer:
        raise UnsupportedGeometryError(
            "skin expansion needs a circular outer boundary")
    return r_sigma, r_outer


def smooth_cutoff(y, width):
    """Quintic transition from 1 to 0 over [0.4, 0.8] * width."""
    y = np.asarray(y, dtype=float)
    lo, hi = 0.4 * width, 0.8 * width
    s = np.clip((y - lo) / (hi - lo), 0.0, 1.0)
    return 1.0 - (10 * s ** 3 - 15 * s ** 4 + 6 * s ** 5)


@dataclass
class SkinExpansion:
    """Evaluable two-scale expansion E(x; delta) = sum_j delta^j E_j."""

    mesh: object
    problem: TmProblem
    order: int
    bc: str
    r_sigma: float
    u0: fem.ScalarField
    u1: fem.ScalarField
    amp_hat: np.ndarray          # FFT coefficients of the profile amplitude
    lambda_y: complex            # decay rate in the stretched variable
    probe: float = 0.0
    meta: dict = field(default_factory=dict)

    def profile_amplitude(self, theta):
        n = len(self.amp_hat)
        freqs = np.fft.fftfreq(n, d=1.0 / n)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for ah, fr in zip(self.amp_hat, freqs):
            out += ah * np.exp(1j * fr * theta)
        return out

    def profile(self, theta, y3, delta):
        """First boundary-layer term W_1(theta, y3/delta) with cutoff."""
        amp = self.profile_amplitude(theta)
        decay = np.exp(-self.lambda_y * np.asarray(y3) / delta)
        return amp * decay * smooth_cutoff(y3, self.r_sigma)

    def evaluate_nodal(self, delta):
        """Expansion field at the mesh nodes for a given delta."""
        mesh = self.mesh
        out = np.array(self.u0.coeffs, dtype=complex)
        if self.order >= 1:
            out = out + delta * self.u1.coeffs
            minus = mesh.subdomain_nodes("minus")
            inodes = mesh.interface_nodes()
            interior = np.setdiff1d(minus, inodes)
            x, y = mesh.nodes[interior].T
            r = np.hypot(x, y)
            theta = np.arctan2(y, x)
            y3 = self.r_sigma - r
            out[interior] = delta * self.profile(theta, y3, delta)
        return out


def skin_expansion(problem, order, mesh, bc="insulating_analog"):
    """Build the order-0/1 expansion; requires j supported in the annulus."""
    if order not in (0, 1):
        raise ValueError("expansion order must be 0 or 1")
    r_sigma, _ = _annulus_radii(mesh)
    jp, jm = fem.data_pair(problem.j)
    if not fem.is_zero_data((None, jm)):
        raise ValueError("skin expansion requires j = 0 in the conductor")

    a, free, fixed = _limit_solver(problem, mesh, bc)
    ops = fem.operators(mesh)
    n = mesh.n_nodes
    a_ff = a[free][:, free]
    a_fc = a[free][:, fixed]
    factor = sparse.factorize(a_ff)
    load = 1j * problem.nu * fem.assemble_domain_load(
        mesh, (jp, None), triangles=mesh.subdomain_triangles("plus"))

    # limit field: clamped on the interface
    u0 = np.zeros(n, dtype=complex)
    u0[free] = factor.solve(load[free])

    # interface flux of u0 (normal pointing into the annulus): residual rows
    inodes = mesh.interface_nodes()
    resid = a @ u0 - load
    t = np.zeros(n, dtype=complex)
    t[inodes] = -resid[inodes]
    m_sigma, _ = ops.sigma_mass()
    q = ops.sigma_mass_factor().solve(t[inodes])     # nodal d(u0)/dn on Sigma

    lambda_y = problem.kappa * (1.0 - 1j) / math.sqrt(2.0)
    amp = q / lambda_y

    # order the interface values by angle for the Fourier representation
    theta_i = np.arctan2(mesh.nodes[inodes, 1], mesh.nodes[inodes, 0])
    order_idx = np.argsort(np.mod(theta_i, 2 * math.pi))
    theta_sorted = np.mod(theta_i, 2 * math.pi)[order_idx]
    gaps = np.diff(theta_sorted)
    if len(gaps) and (np.max(gaps) - np.min(gaps)) > 1e-8:
        raise UnsupportedGeometryError(
            "interface nodes are not uniformly spaced in angle")
    amp_hat = np.fft.fft(amp[order_idx]) / len(order_idx)

    u1 = np.zeros(n, dtype=complex)
    if order >= 1:
        vals = np.zeros(n, dtype=complex)
        vals[inodes] = amp
        u1[free] = factor.solve(-(a_fc @ vals[fixed]))
        u1[fixed] = vals[fixed]

    return SkinExpansion(mesh=mesh, problem=problem, order=order, bc=bc,
                         r_sigma=r_sigma,
                         u0=fem.ScalarField(mesh, u0),
                         u1=fem.ScalarField(mesh, u1),
                         amp_hat=amp_hat, lambda_y=lambda_y)


# ---------------------------------------------------------------------------
# delta-expansion remainder study

def interface_radial_resolution(mesh):
    """Radial mesh size just inside the interface (layer resolution)."""
    r_sigma, _ = _annulus_radii(mesh)
    minus = mesh.subdomain_nodes("minus")
    r = np.hypot(*mesh.nodes[minus].T)
    inner = r[r < r_sigma * (1 - 1e-12)]
    if len(inner) == 0:
        raise UnsupportedGeometryError("no interior nodes in the conductor")
    return float(r_sigma - inner.max())


@dataclass
class RemainderRow:
    delta: float
    sigma: float
    weighted_remainder: float
    pieces: dict


@dataclass
class RemainderStudy:
    order: int
    rows: list
    slope: float
    slope_window: float


def weighted_remainder_norm(field, delta):
    """|R|_{0,+} + |grad R|_{0,+} + delta^-1/2 |R|_{0,-} + delta^1/2 |grad R|_{0,-}."""
    rep = fem.norms(field)
    value = (rep.l2_plus + rep.h1semi_plus
             + delta ** -0.5 * rep.l2_minus + delta ** 0.5 * rep.h1semi_minus)
    pieces = {"l2_plus": rep.l2_plus, "h1semi_plus": rep.h1semi_plus,
              "l2_minus": rep.l2_minus, "h1semi_minus": rep.h1semi_minus}
    return value, pieces


def fit_loglog_slope(x, y):
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.maximum(np.asarray(y, dtype=float), 1e-300))
    xbar, ybar = x.mean(), y.mean()
    return float(((x - xbar) @ (y - ybar)) / ((x - xbar) @ (x - xbar)))


def remainder_delta_study(problem, order, delta_values, mesh,
                          bc="insulating_analog", min_per_depth=8.0):
    """Weighted remainder norms of the truncated expansion over a delta list."""
    delta_values = sorted(float(d) for d in delta_values)
    d_min = math.sqrt(2.0) * delta_values[0] / problem.kappa
    h_rad = interface_radial_resolution(mesh)
    if d_min / h_rad < min_per_depth:
        raise ResolutionError(
            f"layer under-resolved: {d_min / h_rad:.1f} elements per skin "
            f"depth < {min_per_depth}; need radial h <= "
            f"{d_min / min_per_depth:.3e} at the interface",
            required_h=d_min / min_per_depth)

    expansion = skin_expansion(problem, order, mesh, bc=bc)
    rows = []
    for delta in delta_values:
        prob = TmProblem.from_delta(problem.omega, delta, j=problem.j,
                                    eps0=problem.eps0, mu0=problem.mu0)
        u_h = solve_tm(prob, mesh, bc=bc)
        r_field = fem.ScalarField(mesh,
                                  u_h.coeffs - expansion.evaluate_nodal(delta))
        value, pieces = weighted_remainder_norm(r_field, delta)
        rows.append(RemainderRow(delta=delta, sigma=prob.sigma,
                                 weighted_remainder=value, pieces=pieces))
    deltas = [r.delta for r in rows]
    values = [r.weighted_remainder for r in rows]
    slope = fit_loglog_slope(deltas, values)
    slope_window = fit_loglog_slope(deltas[:3], values[:3]) \
        if len(rows) >= 3 else slope
    return RemainderStudy(order=order, rows=rows, slope=slope,
                          slope_window=slope_window)


REMAINDER_CSV_COLUMNS = "delta,m,weighted_remainder,slope_window"


def remainder_csv_text(studies):
    lines = [REMAINDER_CSV_COLUMNS]
    for study in studies:
        for r in study.rows:
            lines.append(f"{r.delta:.17g},{study.order},"
                         f"{r.weighted_remainder:.17g},"
                         f"{study.slope_window:.17g}")
    return "\n".join(lines) + "\n"
