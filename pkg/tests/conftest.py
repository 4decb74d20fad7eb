import math
from fractions import Fraction

import pytest

from hourglass import genus2_example, standard_surface
from hourglass.hodge import harmonic_basis, refine_mesh


@pytest.fixture(scope="session")
def torus():
    return standard_surface("SquareTorus", 1)


@pytest.fixture(scope="session")
def octagon():
    return standard_surface("RegularOctagon")


@pytest.fixture(scope="session")
def pillowcase():
    return standard_surface("Pillowcase", 1, 1)


@pytest.fixture(scope="session")
def g2():
    return genus2_example(1, 0.01, 2)


@pytest.fixture(scope="session")
def torus_mesh(torus):
    return refine_mesh(torus, 0.1)


@pytest.fixture(scope="session")
def octagon_mesh(octagon):
    return refine_mesh(octagon, 0.3)


@pytest.fixture(scope="session")
def octagon_basis(octagon_mesh):
    return harmonic_basis(octagon_mesh)


@pytest.fixture(scope="session")
def g2_mesh():
    # s = 0.05 keeps the cylinder short enough for a quick graded mesh
    return refine_mesh(genus2_example(1, 0.05, 2), 0.1)


def corpus():
    """The surfaces every corpus-wide check runs on."""
    return [
        standard_surface("SquareTorus", 1),
        standard_surface("RectTorus", 2, Fraction(1, 2)),
        standard_surface("RegularOctagon"),
        standard_surface("Pillowcase", 1, 1),
        genus2_example(1, 0.01, 2),
        genus2_example(1, 0.02, 2),
        genus2_example(1, 0.05, 2),
    ]


TWO_PI = 2 * math.pi
