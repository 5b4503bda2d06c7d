import numpy as np
import pytest

from contrastlab import oracle
from contrastlab.errors import CompatibilityError, OracleRefusalError


def zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


class TestLimitChain:
    def test_mode1_neumann_profiles(self):
        # hand algebra: A + B = 1, A - B/4 = 0 for the outer piece
        sol = oracle.radial_transmission(1, None, "neumann", g_amplitude=1.0)
        inside = sol.r <= 1.0
        expect = np.where(inside, sol.r,
                          sol.r / 5 + 4 / (5 * np.maximum(sol.r, 1e-12)))
        assert np.max(np.abs(sol.values - expect)) <= 1e-10

    def test_mode0_g_rejected(self):
        with pytest.raises(CompatibilityError):
            oracle.radial_transmission(0, None, "neumann", g_amplitude=1.0)

    def test_zero_data(self):
        sol = oracle.radial_transmission(2, None, "dirichlet", g_amplitude=0.0)
        assert not np.any(sol.values)


class TestClosedForm:
    def test_mode1_finite_rho(self):
        rho = 1000.0
        sol = oracle.radial_transmission(1, rho, "neumann", g_amplitude=1.0)
        b = (rho - 1) / (5 * rho + 3)
        expect = np.where(sol.r <= 1, 5 * b * sol.r,
                          b * sol.r + 4 * b / np.maximum(sol.r, 1e-12))
        assert np.max(np.abs(sol.values - expect)) <= 1e-12

    def test_complex_rho(self):
        sol = oracle.radial_transmission(1, 100.0 * 1j, "dirichlet",
                                         g_amplitude=1.0)
        assert np.iscomplexobj(sol.values)
        assert np.isfinite(sol.values).all()

    def test_mode0_dirichlet_constant_inside(self):
        sol = oracle.radial_transmission(0, 50.0, "dirichlet",
                                         g_amplitude=1.0)
        inside = sol.values[sol.r < 1.0]
        assert np.allclose(inside, inside[0])


class TestFiniteVolumePath:
    def test_matches_closed_form(self):
        rho = 1000.0
        fv = oracle.radial_transmission(1, rho, "neumann",
                                        f_profile=(zero, zero),
                                        g_amplitude=1.0, n_grid=4096)
        cf = oracle.radial_transmission(1, rho, "neumann", g_amplitude=1.0)
        diff = np.abs(fv.profile_at(cf.r) - cf.values).max()
        assert diff <= 1e-8
        assert fv.method == "finite_volume"
        assert fv.richardson_rel <= oracle.RICHARDSON_TOL

    def test_mode0_dirichlet_with_source(self):
        # rho * laplace(p) = 1 inside, laplace(p) = 0 outside, p(2) = 0
        rho = 1000.0
        sol = oracle.radial_transmission(
            0, rho, "dirichlet", f_profile=(zero, lambda r: np.ones_like(r)))
        r = sol.r
        expect = np.where(r <= 1,
                          r ** 2 / (4 * rho) - np.log(2) / 2 - 1 / (4 * rho),
                          0.5 * np.log(np.maximum(r, 1e-12) / 2.0))
        assert np.max(np.abs(sol.values - expect)) <= 1e-8

    def test_incompatible_mode0_neumann(self):
        with pytest.raises(CompatibilityError):
            oracle.radial_transmission(
                0, 10.0, "neumann",
                f_profile=(lambda r: np.ones_like(r), zero))

    def test_refuses_on_coarse_grid(self):
        with pytest.raises(OracleRefusalError) as err:
            oracle.radial_transmission(
                3, 10.0, "dirichlet",
                f_profile=(lambda r: np.sin(3 * r), zero), n_grid=8)
        assert err.value.coarse is not None and err.value.fine is not None


class TestRadialTm:
    def test_zero_source(self):
        sol = oracle.radial_tm(0, 1.0, 1e4, (zero, zero), n_grid=2048)
        assert np.max(np.abs(sol.values)) <= 1e-14

    def test_skin_depth_efolding(self):
        j_plus = lambda r: ((r > 1.2) & (r < 1.8)).astype(float)
        sol = oracle.radial_tm(0, 1.0, 1e6, (j_plus, zero),
                               breakpoints=(1.2, 1.8))
        d = sol.meta["skin_depth"]
        mask = (sol.r < 1.0) & (sol.r > 1.0 - 6 * d)
        slope = np.polyfit(1.0 - sol.r[mask],
                           np.log(np.abs(sol.values[mask])), 1)[0]
        efold = -1.0 / slope
        assert abs(efold - d) / d < 0.05

    def test_linearity(self):
        j_plus = lambda r: ((r > 1.2) & (r < 1.8)).astype(float)
        s1 = oracle.radial_tm(0, 1.0, 1e4, (j_plus, zero),
                              breakpoints=(1.2, 1.8))
        s2 = oracle.radial_tm(0, 1.0, 1e4,
                              (lambda r: 2.0 * j_plus(r), zero),
                              breakpoints=(1.2, 1.8))
        assert np.max(np.abs(s2.values - 2 * s1.values)) <= \
            1e-10 * np.max(np.abs(s1.values))

    def test_richardson_certified(self):
        j_plus = lambda r: ((r > 1.2) & (r < 1.8)).astype(float)
        sol = oracle.radial_tm(0, 1.0, 1e4, (j_plus, zero),
                               breakpoints=(1.2, 1.8))
        assert sol.richardson_rel <= oracle.RICHARDSON_TOL

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            oracle.radial_tm(0, 1.0, -5.0, (zero, zero))


def test_eval_xy_reconstruction():
    sol = oracle.radial_transmission(1, 100.0, "neumann", g_amplitude=1.0)
    x, y = 0.9, 0.4
    r = np.hypot(x, y)
    expected = sol.profile_at(np.array([r]))[0] * (x / r)
    assert abs(sol.eval_xy(np.array([x]), np.array([y]))[0]
               - expected) <= 1e-12


def test_profile_csv(tmp_path):
    sol = oracle.radial_transmission(1, 100.0, "neumann", g_amplitude=1.0)
    path = tmp_path / "profile.csv"
    oracle.write_profile_csv(sol, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,re,im"
    assert len(lines) == len(sol.r) + 1
