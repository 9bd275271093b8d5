import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genus_sim.pfaffian import PfaffianError, SparseSkew, from_log, parse_dump, pfaffian, pfaffian_frontal, pfaffian_log


def random_skew(rng, n, density=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a *= rng.random((n, n)) < density
    return a - a.T


def test_two_by_two():
    assert pfaffian([[0, 3 + 1j], [-3 - 1j, 0]]) == pytest.approx(3 + 1j)


def test_four_by_four_expansion(rng):
    a = random_skew(rng, 4)
    expect = a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]
    assert pfaffian(a) == pytest.approx(expect, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 6, 10, 16]))
def test_square_equals_determinant(seed, n):
    a = random_skew(np.random.default_rng(seed), n)
    pf = pfaffian(a)
    det = np.linalg.det(a)
    assert abs(pf * pf - det) <= 1e-9 * max(abs(det), 1e-300)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([4, 8, 20, 40]), st.floats(0.05, 0.6))
def test_frontal_matches_dense(seed, n, density):
    rng = np.random.default_rng(seed)
    a = random_skew(rng, n, density)
    m = SparseSkew(n)
    for i in range(n):
        for j in range(i + 1, n):
            if a[i, j] != 0:
                m.add(i, j, a[i, j])
    order = list(rng.permutation(n))
    p1, l1 = pfaffian_log(a)
    p2, l2 = pfaffian_frontal(m.rows, order)
    assert abs(from_log(p1, l1) - from_log(p2, l2)) <= 1e-9 * max(abs(from_log(p1, l1)), 1e-12)


def test_zero_pfaffian_and_log_scale():
    assert pfaffian(np.zeros((4, 4))) == 0
    big = np.zeros((200, 200))
    for k in range(0, 200, 2):
        big[k, k + 1], big[k + 1, k] = 1e10, -1e10
    phase, logabs = pfaffian_log(big)
    assert phase == pytest.approx(1) and logabs == pytest.approx(100 * np.log(1e10))


def test_errors():
    with pytest.raises(PfaffianError):
        pfaffian(np.zeros((3, 3)))
    with pytest.raises(PfaffianError):
        pfaffian(np.ones((2, 2)))
    with pytest.raises(PfaffianError):
        SparseSkew(2).add(1, 1, 1.0)


def test_dump_round_trip(rng):
    m = SparseSkew(6)
    m.add(0, 3, 1.5 - 2j)
    m.add(4, 1, 0.25)
    m.add(2, 5, -1j)
    back = parse_dump(m.dump())
    assert np.array_equal(back.dense(), m.dense())
    with pytest.raises(PfaffianError):
        parse_dump("nope 2\n")
