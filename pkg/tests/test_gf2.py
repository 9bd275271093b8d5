import itertools

from hypothesis import given, strategies as st

from genus_sim import gf2

vecs = st.lists(st.integers(0, 2**10 - 1), min_size=1, max_size=8)


def brute_rank(vs):
    span = {0}
    for v in vs:
        span |= {x ^ v for x in span}
    return len(span).bit_length() - 1


@given(vecs)
def test_rank_matches_span_size(vs):
    assert gf2.rank(vs) == brute_rank(vs)


@given(vecs, st.integers(0, 2**10 - 1))
def test_express_reconstructs(vs, target):
    b = gf2.Basis()
    for v in vs:
        b.add(v)
    combo = b.express(target)
    if combo is None:
        assert not b.contains(target)
    else:
        acc = 0
        for i in gf2.bits_of(combo):
            acc ^= vs[i]
        assert acc == target


@given(st.lists(st.integers(0, 2**6 - 1), min_size=1, max_size=7))
def test_nullspace_is_kernel_of_full_dimension(rows):
    ns = gf2.nullspace(rows, 6)
    assert all(gf2.matvec(rows, x) == 0 for x in ns)
    assert len(ns) == 6 - gf2.rank(rows)
    assert gf2.independent(ns) or not ns


def test_inverse_round_trip():
    for rows in itertools.product(range(8), repeat=3):
        if gf2.rank(rows) < 3:
            continue
        inv = gf2.inverse(rows, 3)
        for i in range(3):
            # (inv * rows)[i] = xor of rows selected by inv[i]
            acc = 0
            for k in gf2.bits_of(inv[i]):
                acc ^= rows[k]
            assert acc == 1 << i


def test_transpose_and_bits():
    rows = [0b101, 0b010]
    assert gf2.transpose(rows, 3) == [0b01, 0b10, 0b01]
    assert gf2.bits_of(0b1011) == [0, 1, 3]
    assert gf2.from_indices([0, 3, 3, 4]) == 0b10001
    assert gf2.dot(0b110, 0b011) == 1 and gf2.parity(0b111) == 1


def test_symplectic_basis_pairs():
    # standard form on 4 bits: pairs (0,1), (2,3)
    def form(a, b):
        return sum(((a >> (2 * j)) & 1) * ((b >> (2 * j + 1)) & 1) ^ ((a >> (2 * j + 1)) & 1) * ((b >> (2 * j)) & 1) for j in range(2)) & 1

    pairs = gf2.symplectic_basis([0b0011, 0b0001, 0b0100, 0b1100], form)
    flat = [v for p in pairs for v in p]
    for i, a in enumerate(flat):
        for j, b in enumerate(flat):
            assert form(a, b) == (i ^ 1 == j)
