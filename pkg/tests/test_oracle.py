import itertools

import numpy as np
import pytest

from conftest import cylinder, square
from genus_sim.code_states import CodeState, c_to_x, random_state, special_state
from genus_sim.embedded_graph import toroidal_grid
from genus_sim.oracle import (
    SizeCapError,
    apply_x,
    apply_z,
    boundary_vertices,
    cycle_space,
    dense_code_state,
    dense_distribution,
    dense_partial_probability,
    dense_plus,
    entanglement_spectrum,
    reduced_density_matrix,
)


def test_support_size(torus3):
    g, _ = torus3
    plus = dense_plus(g)
    assert np.count_nonzero(plus.amps) == 2 ** (g.n_edges - g.n_vertices + 1)
    assert plus.norm() == pytest.approx(1, abs=1e-12)
    assert len(cycle_space(square())) == 2


def test_stabilizers(torus3):
    g, s = torus3
    plus = dense_plus(g)
    for v in range(g.n_vertices):
        assert np.allclose(apply_z(plus, g.star(v)).amps, plus.amps, atol=1e-12)
    for f in range(g.n_faces):
        assert np.allclose(apply_x(plus, g.face_boundary(f)).amps, plus.amps, atol=1e-12)
    for c in s.cycles:
        assert np.allclose(apply_x(plus, c).amps, plus.amps, atol=1e-12)


def test_x_basis_orthonormal():
    spec, g, layout, s = cylinder("N=2 M=5 slot=1,0,1 slot=3,1,1")
    vecs = [dense_code_state(CodeState("X", 2, {k: 1}), g, s).amps for k in range(16)]
    gram = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    assert np.allclose(gram, np.eye(16), atol=1e-12)


def test_c_states_and_their_stabilizers(torus3):
    g, s = torus3
    x1, x2 = s.cycles
    z1, z2 = s.cocycles
    for d, e in itertools.product((0, 1), repeat=2):
        st = dense_code_state(special_state(d, e, 1, s), g, s)
        assert st.norm() == pytest.approx(1, abs=1e-12)
        # (-1)^delta X1 Z2 and (-1)^eps Z1 X2 fix |C^{delta,eps}>
        a = apply_x(apply_z(st, z2), x1).amps * (-1) ** d
        b = apply_x(apply_z(st, z1), x2).amps * (-1) ** e
        assert np.allclose(a, st.amps, atol=1e-12) and np.allclose(b, st.amps, atol=1e-12)
        other = dense_code_state(c_to_x(special_state(d, e, 1, s)), g, s)
        assert np.allclose(other.amps, st.amps, atol=1e-12)


def test_distribution_sums_to_one(cyl1, rng):
    spec, g, layout, s = cyl1
    bases = np.array([np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0].T for _ in range(g.n_edges)])
    dist = dense_distribution(dense_plus(g), bases)
    assert dist.sum() == pytest.approx(1, abs=1e-12)
    # marginal of edge 0 agrees with the partial probability
    p0 = dist[(np.arange(dist.size) & 1) == 0].sum()
    assert p0 == pytest.approx(dense_partial_probability(dense_plus(g), [0], [bases[0][0]]))


def test_reduced_state_has_flat_spectrum():
    spec, g, layout, s = cylinder("N=3 M=3 slot=1,0,1")
    plus = dense_plus(g)
    order = layout.ltor_order()
    for k in (3, 5, 7, 9):
        rho = reduced_density_matrix(plus, order[:k])
        ev = np.linalg.eigvalsh(rho)
        nz = ev[ev > 1e-10]
        nb = len(boundary_vertices(g, order[:k]))
        assert np.allclose(nz, 2.0 ** -(nb - 1))
        assert len(nz) == 2 ** (nb - 1)


def test_spectrum_routes_agree(cyl1, rng):
    spec, g, layout, s = cyl1
    st = dense_code_state(random_state(1, rng, "X"), g, s)
    for edges in ([0, 3], [1, 2, 5, 7], list(range(6))):
        a = np.sort(np.linalg.eigvalsh(reduced_density_matrix(st, edges)))[::-1]
        b = entanglement_spectrum(st, edges)
        assert np.allclose(a[: len(b)], b, atol=1e-12)
        assert np.allclose(a[len(b) :], 0, atol=1e-12)


def test_size_cap():
    g = toroidal_grid(4, 4)  # 32 edges
    with pytest.raises(SizeCapError):
        dense_plus(g)
    with pytest.raises(SizeCapError):
        cycle_space(g)
