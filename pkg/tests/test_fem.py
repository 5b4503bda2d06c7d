import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contrastlab import fem
from contrastlab.errors import SingularSystemError
from contrastlab.mesh import Mesh


def unit_right_triangle_mesh():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return Mesh(nodes, np.array([[0, 1, 2]]), np.array([1]))


class TestStiffness:
    def test_unit_right_triangle_local_matrix(self):
        m = unit_right_triangle_mesh()
        k = fem.assemble_stiffness(m).toarray().real
        expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
        assert np.allclose(k, expected, atol=1e-14)

    def test_coefficient_linearity(self, annulus1):
        k1 = fem.assemble_stiffness(annulus1, 1.0, 1.0)
        kc = fem.assemble_stiffness(annulus1, 3.5, 3.5)
        assert np.allclose(kc.toarray(), 3.5 * k1.toarray())

    def test_constants_in_kernel(self, annulus2):
        k = fem.assemble_stiffness(annulus2, 2.0, 5.0 + 1j)
        ones = np.ones(annulus2.n_nodes)
        r = np.abs(k @ ones)
        assert r.max() <= 1e-13 * np.abs(k.data).max()


class TestLoads:
    def test_domain_load_constant_sums_to_area(self, annulus2):
        load = fem.assemble_domain_load(annulus2, 1.0)
        area = (annulus2.subdomain_area("plus")
                + annulus2.subdomain_area("minus"))
        assert complex(load.sum()).real == pytest.approx(area, rel=1e-12)

    def test_domain_load_zero(self, annulus1):
        assert not np.any(fem.assemble_domain_load(annulus1, 0))
        assert not np.any(fem.assemble_domain_load(annulus1, None))

    def test_indicator_sums_to_polygon_area(self, annulus2):
        load = fem.assemble_domain_load(annulus2, (0.0, 1.0))
        assert complex(load.sum()).real == pytest.approx(
            annulus2.subdomain_area("minus"), rel=1e-12)

    def test_interface_load_partition_of_unity(self, annulus2):
        g = fem.assemble_interface_load(annulus2, 1.0)
        assert complex(g.sum()).real == pytest.approx(
            annulus2.interface_perimeter(), rel=1e-12)

    def test_interface_load_cos_theta_sums_to_zero(self, annulus2, g_cos):
        g = fem.assemble_interface_load(annulus2, g_cos)
        assert abs(complex(g.sum())) <= 1e-13

    def test_interface_load_scale_zero(self, annulus1, g_cos):
        assert not np.any(fem.assemble_interface_load(annulus1, g_cos, 0.0))


class TestNorms:
    def test_constant_field(self, annulus2):
        rep = fem.norms(fem.ScalarField(annulus2,
                                        np.ones(annulus2.n_nodes)))
        assert rep.l2_plus ** 2 == pytest.approx(
            annulus2.subdomain_area("plus"), rel=1e-12)
        assert rep.h1semi_plus <= 1e-6
        assert rep.h1semi_minus <= 1e-6

    def test_linear_field_gradient(self, annulus2):
        rep = fem.norms(fem.ScalarField(annulus2,
                                        annulus2.nodes[:, 0].astype(complex)))
        total = rep.h1semi_plus ** 2 + rep.h1semi_minus ** 2
        area = (annulus2.subdomain_area("plus")
                + annulus2.subdomain_area("minus"))
        assert total == pytest.approx(area, rel=1e-12)

    def test_r_cos_theta_on_disk(self, annulus3):
        rep = fem.norms(fem.ScalarField(annulus3,
                                        annulus3.nodes[:, 0].astype(complex)))
        assert abs(rep.l2_minus ** 2 - np.pi / 4) < 2 * annulus3.h_max ** 2

    def test_h1_dominates_l2(self, annulus1):
        rng = np.random.default_rng(0)
        f = fem.ScalarField(annulus1, rng.standard_normal(annulus1.n_nodes)
                            + 1j * rng.standard_normal(annulus1.n_nodes))
        rep = fem.norms(f)
        assert rep.h1_plus >= rep.l2_plus
        assert rep.h1_minus >= rep.l2_minus
        assert all(v >= 0 for v in vars(rep).values())


class TestConstraints:
    def test_zero_mean_enforced(self, annulus2, g_cos):
        k = fem.assemble_stiffness(annulus2)
        b = fem.assemble_interface_load(annulus2, g_cos)
        system = fem.constrain(
            fem.LinearSystem(k, b, annulus2), "zero_mean")
        x = fem.solve_system(system)
        w = fem.lumped_mass_vector(annulus2)
        assert abs(w @ x) <= 1e-12 * np.linalg.norm(x)

    def test_dirichlet_zero_data_zero_solution(self, annulus1):
        k = fem.assemble_stiffness(annulus1)
        system = fem.constrain(
            fem.LinearSystem(k, np.zeros(annulus1.n_nodes, dtype=complex),
                             annulus1), "dirichlet_exterior")
        assert not np.any(fem.solve_system(system))

    def test_manufactured_affine_exact(self, annulus2):
        k = fem.assemble_stiffness(annulus2)
        bn = annulus2.boundary_nodes()
        system = fem.constrain(
            fem.LinearSystem(k, np.zeros(annulus2.n_nodes, dtype=complex),
                             annulus2),
            "dirichlet_exterior", values=annulus2.nodes[bn, 0])
        x = fem.solve_system(system)
        assert np.abs(x - annulus2.nodes[:, 0]).max() <= 1e-12

    def test_neumann_pure_without_zero_mean_errors(self, annulus1, g_cos):
        k = fem.assemble_stiffness(annulus1)
        b = fem.assemble_interface_load(annulus1, g_cos)
        system = fem.constrain(fem.LinearSystem(k, b, annulus1),
                               "neumann_pure")
        with pytest.raises(SingularSystemError):
            fem.solve_system(system)

    def test_dirichlet_on_sigma(self, annulus1):
        k = fem.assemble_stiffness(annulus1)
        system = fem.LinearSystem(k, np.zeros(annulus1.n_nodes,
                                              dtype=complex), annulus1)
        inodes = annulus1.interface_nodes()
        system = fem.constrain(system, "dirichlet_on_sigma",
                               values=np.ones(len(inodes)))
        system = fem.constrain(system, "dirichlet_exterior")
        x = fem.solve_system(system)
        assert np.allclose(x[inodes], 1.0)
        r = np.hypot(*annulus1.nodes.T)
        exact = np.where(r >= 1.0, np.log(2 / np.maximum(r, 0.5)) / np.log(2),
                         1.0)
        plus = annulus1.subdomain_nodes("plus")
        assert np.abs(x[plus] - exact[plus]).max() < 3 * annulus1.h_max ** 2


@settings(max_examples=10, deadline=None)
@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=10,
                          allow_infinity=False, allow_nan=False))
def test_stiffness_scaling_property(c):
    from contrastlab.mesh import build_annulus
    mesh = build_annulus(1.0, 2.0, 0)
    k1 = fem.assemble_stiffness(mesh, 1.0, 2.0)
    kc = fem.assemble_stiffness(mesh, c, 2.0 * c)
    assert np.allclose(kc.toarray(), c * k1.toarray(), atol=1e-12)
