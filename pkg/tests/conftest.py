import numpy as np
import pytest

from genus_sim.embedded_graph import EmbeddedGraph, PuncturedCylinderSpec, punctured_cylinder, toroidal_grid
from genus_sim.homology import canonical_encoding_scheme

DIPOLE_ROTATION = [[0, 2, 4, 8, 6], [1, 9, 5, 7, 3]]


def cylinder(text):
    spec = PuncturedCylinderSpec.parse(text)
    g, layout = punctured_cylinder(spec)
    scheme = canonical_encoding_scheme(g, layout=layout, slots=spec.slots)
    return spec, g, layout, scheme


def square():
    return EmbeddedGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [[0, 7], [1, 2], [3, 4], [5, 6]])


def five_edge_dipole():
    """Two vertices joined by five parallel edges on the torus."""
    return EmbeddedGraph(2, [(0, 1)] * 5, DIPOLE_ROTATION)


def parallel_torus():
    """Two vertices, four parallel edges, alternating rotation."""
    return EmbeddedGraph(2, [(0, 1)] * 4, [[0, 2, 4, 6], [1, 5, 3, 7]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def torus3():
    g = toroidal_grid(3, 3)
    return g, canonical_encoding_scheme(g)


@pytest.fixture(scope="session")
def cyl1():
    return cylinder("N=3 M=2 slot=0,1,1")


@pytest.fixture(scope="session")
def cyl2():
    return cylinder("N=2 M=5 slot=1,0,1 slot=3,1,1")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda l: int(l.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
