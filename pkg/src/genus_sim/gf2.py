"""GF(2) linear algebra on bitsets.

Vectors are Python ints used as packed bitsets (bit ``i`` is coordinate ``i``),
so XOR is vector addition and arbitrary lengths cost nothing extra.
"""

from __future__ import annotations

from typing import Iterable, Sequence


def bits_of(x: int) -> list[int]:
    """Indices of set bits in ascending order."""
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def from_indices(indices: Iterable[int]) -> int:
    v = 0
    for i in indices:
        v ^= 1 << i
    return v


def parity(x: int) -> int:
    return x.bit_count() & 1


def dot(a: int, b: int) -> int:
    return (a & b).bit_count() & 1


class Basis:
    """Incrementally built row-echelon basis with combination tracking.

    Each stored row remembers which inserted vectors were XORed to form it,
    so ``express`` returns coefficients in terms of the original inputs.
    Pivots are the highest set bit of each row.
    """

    def __init__(self) -> None:
        self.rows: dict[int, tuple[int, int]] = {}  # pivot -> (row, combo)
        self.count = 0

    def reduce(self, v: int) -> tuple[int, int]:
        """Reduce ``v`` against the basis; return (residual, combo used)."""
        combo = 0
        while v:
            hit = self.rows.get(v.bit_length() - 1)
            if hit is None:
                return v, combo
            v ^= hit[0]
            combo ^= hit[1]
        return 0, combo

    def add(self, v: int) -> bool:
        """Insert a vector; return True when it was independent."""
        tag = 1 << self.count
        self.count += 1
        r, combo = self.reduce(v)
        if r == 0:
            return False
        self.rows[r.bit_length() - 1] = (r, combo ^ tag)
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0

    def express(self, v: int) -> int | None:
        """Combination of inserted vectors summing to ``v``, or None."""
        r, combo = self.reduce(v)
        return combo if r == 0 else None

    @property
    def rank(self) -> int:
        return len(self.rows)


def rank(vectors: Iterable[int]) -> int:
    b = Basis()
    for v in vectors:
        b.add(v)
    return b.rank


def independent(vectors: Sequence[int]) -> bool:
    return rank(vectors) == len(vectors)


def inverse(rows: Sequence[int], n: int) -> list[int]:
    """Inverse of an n x n matrix given as row bitsets (bit j = column j)."""
    a = [rows[i] | (1 << (n + i)) for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if (a[r] >> col) & 1), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        a[col], a[piv] = a[piv], a[col]
        for r in range(n):
            if r != col and (a[r] >> col) & 1:
                a[r] ^= a[col]
    mask = (1 << n) - 1
    return [(a[i] >> n) & mask for i in range(n)]


def transpose(rows: Sequence[int], ncols: int) -> list[int]:
    out = [0] * ncols
    for i, r in enumerate(rows):
        for j in bits_of(r):
            out[j] |= 1 << i
    return out


def matvec(rows: Sequence[int], x: int) -> int:
    """Row bitsets times a bit vector, result packed with bit i for row i."""
    y = 0
    for i, r in enumerate(rows):
        if (r & x).bit_count() & 1:
            y |= 1 << i
    return y


def nullspace(rows: Sequence[int], ncols: int) -> list[int]:
    """Basis of {x : rows * x = 0}."""
    a = list(rows)
    pivots: list[tuple[int, int]] = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(a)) if (a[i] >> col) & 1), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(len(a)):
            if i != r and (a[i] >> col) & 1:
                a[i] ^= a[r]
        pivots.append((r, col))
        r += 1
    pivot_cols = {c for _, c in pivots}
    out = []
    for free in range(ncols):
        if free in pivot_cols:
            continue
        x = 1 << free
        for row, col in pivots:
            if (a[row] >> free) & 1:
                x |= 1 << col
        out.append(x)
    return out


def symplectic_basis(vectors: Sequence[int], form) -> list[tuple[int, int]]:
    """Symplectic Gram-Schmidt.

    ``form(a, b)`` is an alternating bilinear form on combinations of the
    input vectors; the vectors must span a space on which it is
    nondegenerate.  Returns pairs (a_k, b_k) with form(a_k, b_k) = 1 and all
    cross pairings zero.
    """
    pool = list(vectors)
    pairs = []
    while pool:
        a = pool.pop(0)
        j = next((i for i, v in enumerate(pool) if form(a, v)), None)
        if j is None:
            raise ValueError("form is degenerate on the given span")
        b = pool.pop(j)
        rest = []
        for v in pool:
            fa = form(v, b)
            fb = form(v, a)
            # v - <v,b> a + <v,a> b is orthogonal to both
            if fa:
                v ^= a
            if fb:
                v ^= b
            rest.append(v)
        pool = rest
        pairs.append((a, b))
    return pairs
