import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cylinder, five_edge_dipole, square
from genus_sim import gf2
from genus_sim.code_states import (
    HANDLE_U,
    CodeState,
    ProductState,
    StateError,
    apply_handles,
    c_to_x,
    effective_state,
    label_to_str,
    pair_label,
    plus_state,
    random_state,
    schmidt_rank_condition,
    special_state,
    split_label,
    str_to_label,
    swap_pairs,
    two_disjoint_bases,
    x_to_c,
)
from genus_sim.embedded_graph import toroidal_grid
from genus_sim.homology import canonical_encoding_scheme, scheme_from_cocycles, tree_cotree_scheme, wide_cylinder_scheme
from genus_sim.oracle import dense_code_state


def brute_partition(rows, elements, rank):
    for a in itertools.combinations(elements, rank):
        if gf2.rank([rows[e] for e in a]) < rank:
            continue
        rest = [e for e in elements if e not in a]
        for b in itertools.combinations(rest, rank):
            if gf2.rank([rows[e] for e in b]) == rank:
                return True
    return False


def test_label_helpers():
    assert str_to_label(label_to_str(0b1101, 4)) == 0b1101
    assert label_to_str(1, 4) == "1000"
    with pytest.raises(StateError):
        str_to_label("012")
    for g in range(4):
        for d in range(1 << g):
            for e in range(1 << g):
                lab = pair_label(d, e, g)
                assert split_label(lab, g) == (d, e)
                assert swap_pairs(lab, g) == pair_label(e, d, g)


def test_handle_matrix_is_orthogonal():
    assert np.allclose(HANDLE_U @ HANDLE_U.T, np.eye(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3))
def test_conversions_round_trip_and_keep_norm(seed, genus):
    rng = np.random.default_rng(seed)
    s = random_state(genus, rng, "X")
    c = x_to_c(s)
    assert c.norm() == pytest.approx(1)
    back = c_to_x(c)
    assert np.allclose(back.vector(), s.vector(), atol=1e-12)


def test_special_state_in_x_basis():
    for g in (1, 2):
        x = c_to_x(special_state(0, 0, g))
        v = x.vector()
        assert np.allclose(np.abs(v), 2.0**-g)
        for lab in range(4**g):
            gam, rho = split_label(lab, g)
            assert v[lab].real == pytest.approx((-1) ** gf2.dot(gam, rho) * 2.0**-g)


def test_special_states_are_orthonormal():
    g = 2
    vecs = [c_to_x(special_state(d, e, g)).vector() for d in range(4) for e in range(4)]
    gram = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    assert np.allclose(gram, np.eye(16))


def test_apply_handles_identity_and_genus_zero():
    v = np.arange(16, dtype=complex)
    assert np.allclose(apply_handles(v, 2, np.eye(4)), v)
    assert np.allclose(apply_handles(np.array([2.0]), 0, HANDLE_U), [2.0])


def test_c_basis_requires_canonical_scheme():
    g = toroidal_grid(3, 3)
    tc = tree_cotree_scheme(g)
    if not tc.canonical:
        with pytest.raises(StateError):
            special_state(0, 0, 1, tc)
    with pytest.raises(StateError):
        CodeState("Y", 1, {0: 1})
    with pytest.raises(StateError):
        CodeState("X", 1, {7: 1})


def test_effective_state_counts(torus3):
    g, s = torus3
    assert effective_state(special_state(1, 0, 1, s), None, s).D == 1
    assert effective_state(plus_state(1, s), None, s).D == 4
    label, psi, mask = effective_state(special_state(1, 1, 1, s), None, s).terms[0]
    assert psi == pytest.approx(-1)  # delta . eps = 1
    assert mask == s.flip_set(label)


def test_state_file_round_trip(rng):
    s = random_state(2, rng, "C", nnz=5)
    back = CodeState.parse(s.format())
    assert back.basis == "C" and back.genus == 2
    assert np.array_equal(back.vector(), s.vector())
    with pytest.raises(StateError):
        CodeState.parse("basis X\ngenus 1\ncoeff 000 1 0\n")
    with pytest.raises(StateError):
        CodeState.parse("genus 1\n")
    with pytest.raises(StateError):
        CodeState.parse("basis X\ngenus 1\nbogus\n")


def test_product_file_round_trip(rng):
    p = ProductState.random(7, rng)
    q = ProductState.parse(p.format(), 7)
    assert np.array_equal(p.amps, q.amps)
    assert "np." not in p.format()
    with pytest.raises(StateError):
        ProductState.parse(p.format(), 8)
    with pytest.raises(StateError):
        ProductState.parse("amp 0 1 0\n")


def test_product_state_normalisation():
    with pytest.raises(StateError):
        ProductState([[1, 1]])
    assert ProductState.zeros(3).z_like().all()
    assert not ProductState.plus(3).z_like().any()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(2, 9))
def test_partition_matches_brute_force(seed, rank, n_elems):
    rng = np.random.default_rng(seed)
    elements = list(range(n_elems))
    rows = {e: int(rng.integers(0, 1 << rank)) for e in elements}
    found = two_disjoint_bases(rows, elements, rank)
    assert (found is not None) == brute_partition(rows, elements, rank)
    if found:
        a, b = found
        assert not set(a) & set(b)
        assert gf2.rank([rows[e] for e in a]) == rank == gf2.rank([rows[e] for e in b])


def dipole_phi(z_edges=()):
    rng = np.random.default_rng(3)
    amps = ProductState.random(5, rng).amps
    for e in z_edges:
        amps[e] = [1, 0]
    return ProductState(amps)


def test_condition_fails_with_z_on_a_cocycle_edge():
    g = five_edge_dipole()
    assert g.genus == 1 and g.n_faces == 3
    s = scheme_from_cocycles(g, [0b10100, 0b11])
    assert s.canonical
    st_ = special_state(0, 0, 1, s)
    assert schmidt_rank_condition(st_, dipole_phi(), s).holds
    for e in (0, 1, 2, 4):
        rep = schmidt_rank_condition(st_, dipole_phi([e]), s)
        assert not rep.holds and rep.bound_only
    assert schmidt_rank_condition(st_, dipole_phi([3]), s).holds


@pytest.mark.parametrize("text", ["N=3 M=4 slot=1,1,1", "N=2 M=5 slot=1,0,1 slot=3,1,1", "N=4 M=9 slot=1,0,2 slot=4,2,1 slot=6,1,2"])
def test_schmidt_condition_on_cylinders(text):
    spec, g, layout, s = cylinder(text)
    rng = np.random.default_rng(0)
    phi = ProductState.random(g.n_edges, rng)
    # single-edge representatives can never give two disjoint bases
    assert not schmidt_rank_condition(plus_state(g.genus, s), phi, s).holds
    w = wide_cylinder_scheme(g, layout, spec.slots)
    rep = schmidt_rank_condition(plus_state(g.genus, w), phi, w)
    n = 2 * g.genus
    assert rep.holds and rep.D == 4**g.genus and rep.e_sch == pytest.approx(n)
    assert len(set(rep.set_a) | set(rep.set_b)) == 2 * n
    for part in (rep.set_a, rep.set_b):
        assert gf2.rank([w.incidence(e) for e in part]) == n


def test_wide_scheme_gives_the_same_states(cyl1):
    spec, g, layout, s = cyl1
    w = wide_cylinder_scheme(g, layout, spec.slots)
    rng = np.random.default_rng(1)
    st_ = random_state(1, rng, "C", scheme=s)
    a = dense_code_state(st_, g, s).amps
    b = dense_code_state(st_.with_scheme(w), g, w).amps
    assert np.allclose(a, b)


def test_genus_zero_is_trivial():
    g = square()
    s = canonical_encoding_scheme(g)
    rep = schmidt_rank_condition(plus_state(0, s), ProductState.plus(4), s)
    assert rep.holds and rep.e_sch == 0 and rep.method == "trivial"
