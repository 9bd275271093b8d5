from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cylinder, parallel_torus, square
from genus_sim.embedded_graph import EmbeddedGraph, toroidal_grid
from genus_sim.homology import canonical_encoding_scheme, scheme_from_cocycles, tree_cotree_scheme
from genus_sim.matching_engine import (
    CycleEngine,
    cycle_generating_function,
    fisher_transform,
    kasteleyn_orientation,
    pair_form,
    relevant_weights,
    skew_matrix,
)
from genus_sim.pfaffian import pfaffian
from genus_sim.verify import brute_cycle_sum, random_graph


def matching_sum(fg, w):
    """Weighted perfect-matching sum of G' by memoised enumeration."""
    gp = fg.graph
    n = gp.n_vertices
    adj = [[] for _ in range(n)]
    for k, (u, v) in enumerate(gp.ends):
        wt = 1.0 if fg.source[k] < 0 else w[fg.source[k]]
        adj[u].append((v, wt))
        adj[v].append((u, wt))

    @lru_cache(None)
    def rec(mask):
        if mask == (1 << n) - 1:
            return 1.0
        i = (~mask & -(~mask)).bit_length() - 1
        return sum(wt * rec(mask | 1 << i | 1 << j) for j, wt in adj[i] if not (mask >> j) & 1)

    return rec(0)


@pytest.mark.parametrize("make", [square, parallel_torus, lambda: toroidal_grid(2, 2), lambda: toroidal_grid(3, 3)])
def test_matchings_biject_with_cycles(make, rng):
    g = make()
    fg = fisher_transform(g, canonical_encoding_scheme(g))
    assert fg.graph.n_vertices % 2 == 0
    assert matching_sum(fg, [1.0] * g.n_edges) == 2 ** g.cycle_space_dim()
    w = rng.normal(size=g.n_edges)
    assert matching_sum(fg, w) == pytest.approx(brute_cycle_sum(g, w).real, rel=1e-9)


def test_square_fisher_graph_is_8_cycle():
    fg = fisher_transform(square())
    assert fg.graph.n_vertices == 8 and fg.graph.n_edges == 8
    assert sorted(fg.source) == [-1] * 4 + [0, 1, 2, 3]


def test_degree_three_gadget():
    theta = EmbeddedGraph(2, [(0, 1)] * 3, [[0, 2, 4], [1, 5, 3]])
    fg = fisher_transform(theta)
    assert fg.graph.n_vertices == 12
    assert fg.graph.n_edges == 2 * 6 + 3  # three spokes and a triangle per gadget


def test_kasteleyn_faces_are_odd():
    fg = fisher_transform(toroidal_grid(3, 3), canonical_encoding_scheme(toroidal_grid(3, 3)))
    gp = fg.graph
    orient = kasteleyn_orientation(gp)
    for walk in gp.faces:
        fwd = sum((orient[d >> 1] == 1) == (d % 2 == 0) for d in walk)
        assert fwd % 2 == 1


def test_cycle_sum_edge_cases():
    g = square()
    s = canonical_encoding_scheme(g)
    assert cycle_generating_function(g, s, [0] * 4) == pytest.approx(1)
    w = [2, 3j, -1, 0.5]
    assert cycle_generating_function(g, s, w) == pytest.approx(1 + 2 * 3j * -1 * 0.5)


def test_torus_matches_enumeration(rng):
    g = toroidal_grid(3, 3)
    s = canonical_encoding_scheme(g)
    eng = CycleEngine(g, s)
    for _ in range(20):
        w = rng.normal(size=18) + 1j * rng.normal(size=18)
        ref = brute_cycle_sum(g, w)
        assert abs(cycle_generating_function(g, s, w, eng) - ref) <= 1e-9 * abs(ref)


def test_flip_rule_gives_signed_cycle_sum(rng):
    g = toroidal_grid(3, 3)
    s = canonical_encoding_scheme(g)
    w = rng.normal(size=18)
    flip = np.array([-1.0 if (s.cocycles[0] >> e) & 1 else 1.0 for e in range(18)])
    ref = brute_cycle_sum(g, w * flip)
    assert cycle_generating_function(g, s, w * flip) == pytest.approx(ref, rel=1e-9)
    fg = fisher_transform(g, s)
    base = skew_matrix(fg, w, 0).dense()
    assert np.array_equal(relevant_weights(fg, w, 0, 0, 1).dense(), base)
    m10 = relevant_weights(fg, w, 1, 0, 1).dense()
    flipped = {k for k, c in enumerate(fg.cuts) if c & 1}
    changed = {k for k, (u, v) in enumerate(fg.graph.ends) if m10[u, v] != base[u, v]}
    assert changed == {k for k in flipped if base[fg.graph.ends[k]] != 0}
    with pytest.raises(ValueError):
        relevant_weights(fg, w, 2, 0, 1)


def test_canonical_table_form():
    spec, g, layout, s = cylinder("N=3 M=5 slot=1,0,1 slot=3,2,1")
    eng = CycleEngine(g, s)
    n = eng.n_labels
    q = np.array([pair_form(l ^ eng.shift, 2) for l in range(n)])
    assert np.allclose(eng.table, eng.kappa * (1 - 2 * q) / 4)
    assert eng.kappa in (1, -1)


def test_subdivision_invariance(rng):
    g = toroidal_grid(3, 3)
    e = 4
    u, v = g.ends[e]
    x = g.n_vertices
    new = g.n_edges
    ends = list(g.ends) + [(x, v)]
    ends[e] = (u, x)
    rot = [[(2 * new + 1) if d == 2 * e + 1 else d for d in r] for r in g.rotation]
    rot.append([2 * e + 1, 2 * new])
    h = EmbeddedGraph(x + 1, ends, rot)
    assert h.genus == 1
    w = rng.normal(size=18) + 1j * rng.normal(size=18)
    a = cycle_generating_function(g, canonical_encoding_scheme(g), w)
    b = cycle_generating_function(h, canonical_encoding_scheme(h), list(w) + [1.0])
    assert a == pytest.approx(b, rel=1e-10)


def test_pfaffian_squared_is_determinant_on_engine_matrices(rng):
    g = toroidal_grid(2, 3)
    fg = fisher_transform(g, canonical_encoding_scheme(g))
    w = rng.normal(size=g.n_edges) + 1j * rng.normal(size=g.n_edges)
    for label in range(4):
        a = skew_matrix(fg, w, label).dense()
        pf = pfaffian(a)
        det = np.linalg.det(a)
        assert abs(pf * pf - det) <= 1e-8 * abs(det)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 2), st.booleans())
def test_random_graphs_match_enumeration(seed, genus, canonical):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 16, genus)
    s = canonical_encoding_scheme(g) if canonical else tree_cotree_scheme(g)
    eng = CycleEngine(g, s)
    for _ in range(5):
        w = rng.normal(size=g.n_edges) + 1j * rng.normal(size=g.n_edges)
        ref = brute_cycle_sum(g, w)
        assert abs(cycle_generating_function(g, s, w, eng) - ref) <= 1e-9 * abs(ref)


def test_threads_do_not_change_results(rng):
    spec, g, layout, s = cylinder("N=3 M=5 slot=1,0,1 slot=3,2,1")
    w = rng.normal(size=g.n_edges)
    a = CycleEngine(g, s, threads=1).pf_many(w, range(16))
    b = CycleEngine(g, s, threads=4).pf_many(w, range(16))
    assert a == b


def test_user_scheme_engine(rng):
    g = toroidal_grid(3, 3)
    c = canonical_encoding_scheme(g).cocycles
    s = scheme_from_cocycles(g, [c[0] ^ g.star(0), c[1]])
    w = rng.normal(size=18)
    assert cycle_generating_function(g, s, w) == pytest.approx(brute_cycle_sum(g, w), rel=1e-9)
