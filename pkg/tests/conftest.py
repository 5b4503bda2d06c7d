import numpy as np
import pytest

from contrastlab import mesh as mesh_mod


@pytest.fixture(scope="session")
def annulus1():
    return mesh_mod.build_annulus(1.0, 2.0, 1)


@pytest.fixture(scope="session")
def annulus2():
    return mesh_mod.build_annulus(1.0, 2.0, 2)


@pytest.fixture(scope="session")
def annulus3():
    return mesh_mod.build_annulus(1.0, 2.0, 3)


@pytest.fixture(scope="session")
def checkerboard1():
    return mesh_mod.build_square_checkerboard(1.0, 1)


def g_cos_theta(x, y):
    r = np.hypot(x, y)
    return x / np.where(r > 0, r, 1.0)


@pytest.fixture(scope="session")
def g_cos():
    return g_cos_theta
