"""Cycle and cocycle spaces, intersection forms and encoding schemes.

Edge sets are int bitsets over edge ids.  Cocycles are cycles of the dual
map, so every cocycle computation reuses the primal routines on
``graph.dual()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import gf2
from .embedded_graph import EmbeddedGraph, EdgeLayout, GraphError, TreeCotree, tree_cotree


class HomologyError(ValueError):
    """Invalid cycle/cocycle input or a failed encoding construction."""


@lru_cache(maxsize=64)
def _dual(g: EmbeddedGraph) -> EmbeddedGraph:
    return g.dual()


def cycle_space_basis(g: EmbeddedGraph, tc: TreeCotree | None = None) -> list[int]:
    """All face boundaries but the last, plus T(e) for each leftover edge."""
    tc = tc or tree_cotree(g)
    basis = [g.face_boundary(f) for f in range(g.n_faces - 1)]
    basis += [tc.fundamental_cycle(g, e) for e in tc.leftover]
    return basis


def intersection(g: EmbeddedGraph, c1: int, c2: int) -> int:
    """Mod-2 intersection number of two cycles of ``g``.

    ``c2`` is pushed off to one side: at each vertex its darts are paired in
    rotation order and every dart of ``c1`` strictly inside a paired wedge
    counts one crossing.  Where the pushed curve switches sides along an
    edge it crosses that edge too.
    """
    total = 0
    left = {}  # dart -> pushed curve lies on its left near its tail
    for darts in g.rotation:
        mine = [i for i, d in enumerate(darts) if (c2 >> (d >> 1)) & 1]
        if not mine:
            continue
        for a, b in zip(mine[0::2], mine[1::2]):
            left[darts[a]] = True
            left[darts[b]] = False
            for d in darts[a + 1 : b]:
                total ^= (c1 >> (d >> 1)) & 1
    for e in gf2.bits_of(c2 & c1):
        if left[2 * e] == left[2 * e + 1]:
            total ^= 1
    return total


def cocycle_intersection(g: EmbeddedGraph, c1: int, c2: int) -> int:
    return intersection(_dual(g), c1, c2)


def is_cycle(g: EmbeddedGraph, x: int) -> bool:
    return g.is_cycle(x)


def is_cocycle(g: EmbeddedGraph, x: int) -> bool:
    return g.is_cocycle(x)


def homology_class(g: EmbeddedGraph, x: int, tc: TreeCotree | None = None) -> int:
    """Coordinates of cycle ``x`` in the basis T(e_1..e_2g), as a bitmask."""
    tc = tc or tree_cotree(g)
    h = 0
    for j, e in enumerate(tc.leftover):
        if gf2.dot(x, tc.fundamental_cocycle(g, e)):
            h |= 1 << j
    return h


def homologically_trivial(x: int, g: EmbeddedGraph, tc: TreeCotree | None = None) -> bool:
    """True iff the cycle ``x`` is a sum of face boundaries.

    A cycle is trivial exactly when it pairs evenly with every fundamental
    cocycle, since those pair dually with the nontrivial T(e_j).
    """
    if not g.is_cycle(x):
        raise HomologyError("input is not a cycle")
    return homology_class(g, x, tc) == 0


def cocycle_trivial(x: int, g: EmbeddedGraph, tc: TreeCotree | None = None) -> bool:
    """True iff the cocycle ``x`` is a sum of vertex stars."""
    if not g.is_cocycle(x):
        raise HomologyError("input is not a cocycle")
    tc = tc or tree_cotree(g)
    return all(gf2.dot(x, tc.fundamental_cycle(g, e)) == 0 for e in tc.leftover)


@dataclass(frozen=True)
class EncodingScheme:
    """Encoding cocycles C'_1..C'_2g and dual cycles C_1..C_2g.

    Index ``k`` (0-based) in both lists is encoded qubit ``k+1``.  When
    ``canonical`` is set, cocycles ``2j`` and ``2j+1`` form a symplectic pair
    and distinct pairs do not intersect.
    """

    cocycles: tuple[int, ...]
    cycles: tuple[int, ...]
    canonical: bool

    @property
    def genus(self) -> int:
        return len(self.cocycles) // 2

    def incidence(self, e: int) -> int:
        """Bitmask of cocycles containing edge ``e``."""
        m = 0
        for k, c in enumerate(self.cocycles):
            if (c >> e) & 1:
                m |= 1 << k
        return m

    def flip_set(self, label: int) -> int:
        """Edges whose sign is flipped by Z-bar^label (the sum of chosen cocycles)."""
        x = 0
        for k in gf2.bits_of(label):
            x ^= self.cocycles[k]
        return x

    def verify(self, g: EmbeddedGraph) -> None:
        """Raise unless this is a valid scheme for ``g`` (canonical flag included)."""
        n = 2 * g.genus
        if len(self.cocycles) != n or len(self.cycles) != n:
            raise HomologyError(f"scheme needs {n} cocycles and cycles")
        for k, c in enumerate(self.cocycles):
            if not g.is_cocycle(c):
                raise HomologyError(f"cocycle {k + 1} fails the face parity check")
        for j, c in enumerate(self.cycles):
            if not g.is_cycle(c):
                raise HomologyError(f"cycle {j + 1} fails the vertex parity check")
            for k, cc in enumerate(self.cocycles):
                if gf2.dot(c, cc) != (j == k):
                    raise HomologyError(f"|C_{j + 1} & C'_{k + 1}| has the wrong parity")
        if self.canonical and not is_symplectic(g, self.cocycles):
            raise HomologyError("scheme flagged canonical but pairs are not symplectic")


def intersection_matrix(g: EmbeddedGraph, cocycles) -> list[int]:
    """Rows of the mod-2 intersection form restricted to ``cocycles``."""
    n = len(cocycles)
    rows = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if cocycle_intersection(g, cocycles[i], cocycles[j]):
                rows[i] |= 1 << j
                rows[j] |= 1 << i
    return rows


def is_symplectic(g: EmbeddedGraph, cocycles) -> bool:
    rows = intersection_matrix(g, cocycles)
    for i, r in enumerate(rows):
        if r != 1 << (i ^ 1):
            return False
    return True


def dual_cycles_for_cocycles(g: EmbeddedGraph, cocycles, tc: TreeCotree | None = None) -> list[int]:
    """Cycles C_j with |C_j & C'_k| = delta_jk, built from fundamental cycles.

    With A[m][k] = |T(e_m) & C'_k| mod 2 the coordinates of C'_k against the
    fundamental cocycles, C_j = sum_m Ainv[j][m] T(e_m).
    """
    tc = tc or tree_cotree(g)
    n = len(tc.leftover)
    if len(cocycles) != n:
        raise HomologyError(f"expected {n} cocycles, got {len(cocycles)}")
    ts = [tc.fundamental_cycle(g, e) for e in tc.leftover]
    a = [sum(gf2.dot(ts[m], cocycles[k]) << k for k in range(n)) for m in range(n)]
    try:
        ainv = gf2.inverse(a, n)
    except ValueError as exc:
        raise HomologyError("cocycles are not homologically independent") from exc
    out = []
    for j in range(n):
        c = 0
        for m in gf2.bits_of(ainv[j]):
            c ^= ts[m]
        out.append(c)
    return out


def scheme_from_cocycles(g: EmbeddedGraph, cocycles, tc: TreeCotree | None = None) -> EncodingScheme:
    """Wrap user cocycles; the canonical flag is certified, never assumed."""
    cocycles = tuple(cocycles)
    for k, c in enumerate(cocycles):
        if not g.is_cocycle(c):
            raise HomologyError(f"cocycle {k + 1} fails the face parity check")
    cycles = dual_cycles_for_cocycles(g, cocycles, tc)
    return EncodingScheme(cocycles, tuple(cycles), is_symplectic(g, cocycles))


def canonical_encoding_scheme(
    g: EmbeddedGraph,
    tc: TreeCotree | None = None,
    layout: EdgeLayout | None = None,
    slots=None,
) -> EncodingScheme:
    """Symplectic encoding scheme.

    For punctured cylinders (``layout`` and ``slots`` given) each slot
    contributes the twisted slot edge (around the handle) and the horizontal
    edge it crosses (through the handle).  Otherwise the fundamental
    cocycles of the tree-cotree split are paired by symplectic Gram-Schmidt
    under the dual intersection form.
    """
    tc = tc or tree_cotree(g)
    if layout is not None and slots:
        cocycles = cylinder_cocycles(layout, slots)
        if all(g.is_cocycle(c) for c in cocycles) and is_symplectic(g, cocycles):
            return EncodingScheme(tuple(cocycles), tuple(dual_cycles_for_cocycles(g, cocycles, tc)), True)
    start = [tc.fundamental_cocycle(g, e) for e in tc.leftover]
    try:
        pairs = gf2.symplectic_basis(start, lambda a, b: cocycle_intersection(g, a, b))
    except ValueError as exc:
        raise HomologyError("intersection form is degenerate on the fundamental cocycles") from exc
    cocycles = [c for pair in pairs for c in pair]
    scheme = EncodingScheme(tuple(cocycles), tuple(dual_cycles_for_cocycles(g, cocycles, tc)), True)
    if not is_symplectic(g, cocycles):
        raise HomologyError("symplectic pairing could not be certified")
    return scheme


def cylinder_cocycles(layout: EdgeLayout, slots) -> list[int]:
    out = []
    for x, y, k in slots:
        c = x + k - 1
        out.append(1 << layout.vertical(y, c))
        if c > 0:
            out.append(1 << layout.horizontal(y, c - 1))
        else:
            out.append(1 << layout.vertical(y - 1, c))
    return out


def wide_cylinder_scheme(g: EmbeddedGraph, layout: EdgeLayout, slots) -> EncodingScheme:
    """Cylinder cocycles each merged with the star of one endpoint.

    Stars are trivial cocycles, so the code space and every encoded state
    are unchanged; the representatives just cross three edges instead of
    one, which is what the disjoint-basis condition needs.
    """
    wide = []
    for c in cylinder_cocycles(layout, slots):
        e = c.bit_length() - 1
        wide.append(c ^ g.star(g.ends[e][1]))
    scheme = scheme_from_cocycles(g, wide)
    if not scheme.canonical:
        raise HomologyError("widened cylinder cocycles lost the symplectic pairing")
    return scheme


def tree_cotree_scheme(g: EmbeddedGraph, tc: TreeCotree | None = None) -> EncodingScheme:
    """The plain choice C'_j = C(e_j), C_j = T(e_j); usually not canonical."""
    tc = tc or tree_cotree(g)
    cocycles = tuple(tc.fundamental_cocycle(g, e) for e in tc.leftover)
    cycles = tuple(tc.fundamental_cycle(g, e) for e in tc.leftover)
    return EncodingScheme(cocycles, cycles, is_symplectic(g, cocycles))
