import numpy as np
import pytest

from sphereflow.mesh import build_icosphere
from sphereflow.surface import embed_equator, normal_frame
from sphereflow.jacobi import assemble_jacobi


@pytest.fixture(scope="session")
def mesh2():
    return build_icosphere(2)


@pytest.fixture(scope="session")
def mesh3():
    return build_icosphere(3)


@pytest.fixture(scope="session")
def mesh4():
    return build_icosphere(4)


@pytest.fixture(scope="session")
def equator3(mesh3):
    return embed_equator(mesh3, 3)


@pytest.fixture(scope="session")
def frame3(equator3):
    return normal_frame(equator3)


@pytest.fixture(scope="session")
def operator3(equator3, frame3):
    return assemble_jacobi(equator3, frame3)


@pytest.fixture(scope="session")
def equator4(mesh4):
    return embed_equator(mesh4, 3)


@pytest.fixture(scope="session")
def frame4(equator4):
    return normal_frame(equator4)


@pytest.fixture(scope="session")
def operator4(equator4, frame4):
    return assemble_jacobi(equator4, frame4)


def random_unit_vector(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_tangent(rng, p):
    v = rng.standard_normal(p.shape)
    v -= (v @ p) * p
    return v
