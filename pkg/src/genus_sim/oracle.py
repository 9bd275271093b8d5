"""Dense brute-force reference.

Everything here works from definitions: the cycle space is the kernel of
the vertex-edge incidence matrix, code states are explicit 2^|E| vectors,
and probabilities come from contracting or enumerating those vectors.  No
Pfaffians and no tree-cotree data are used, so agreement with the fast
paths means something.

Amplitude index bit ``e`` is the Z value of edge ``e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf2
from .code_states import HANDLE_U, CodeState, ProductState, apply_handles
from .embedded_graph import EmbeddedGraph
from .homology import EncodingScheme

MAX_EDGES = 26


class SizeCapError(ValueError):
    """The dense oracle refuses graphs with more than MAX_EDGES edges."""


def _cap(n_edges: int, cap: int = MAX_EDGES) -> None:
    if n_edges > cap:
        raise SizeCapError(f"{n_edges} edges exceeds the dense cap of {cap}")


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    par = np.zeros_like(x)
    while x.any():
        par ^= x & 1
        x >>= 1
    return par


def cycle_basis_by_definition(g: EmbeddedGraph) -> list[int]:
    """Kernel of the incidence matrix: edge sets with even degree everywhere."""
    rows = [g.star(v) for v in range(g.n_vertices)]
    return gf2.nullspace(rows, g.n_edges)


def cycle_space(g: EmbeddedGraph) -> np.ndarray:
    """All cycles as integer masks, enumerated by a Gray-code walk."""
    _cap(g.n_edges)
    basis = cycle_basis_by_definition(g)
    out = np.zeros(1 << len(basis), dtype=np.int64)
    x = 0
    for i in range(1, len(out)):
        x ^= basis[(i & -i).bit_length() - 1]
        out[i] = x
    return out


@dataclass
class DenseState:
    amps: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.amps.size).bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def inner(self, other: "DenseState") -> complex:
        return complex(np.vdot(self.amps, other.amps))


def dense_plus(g: EmbeddedGraph) -> DenseState:
    _cap(g.n_edges)
    cycles = cycle_space(g)
    amps = np.zeros(1 << g.n_edges, dtype=complex)
    amps[cycles] = 1 / math.sqrt(len(cycles))
    return DenseState(amps)


def apply_x(s: DenseState, mask: int) -> DenseState:
    idx = np.arange(s.amps.size)
    return DenseState(s.amps[idx ^ mask])


def apply_z(s: DenseState, mask: int) -> DenseState:
    idx = np.arange(s.amps.size)
    return DenseState(s.amps * (1 - 2 * _popcount_parity(idx & mask)))


def dense_code_state(s: CodeState, g: EmbeddedGraph, scheme: EncodingScheme) -> DenseState:
    """sum_alpha c_alpha Z^alpha |+>, with C-basis input expanded by the handle transform."""
    _cap(g.n_edges)
    coeffs = s.coeffs
    if s.basis == "C":
        coeffs = {int(k): complex(v) for k, v in enumerate(apply_handles(s.vector(), s.genus, HANDLE_U)) if v != 0}
    plus = dense_plus(g)
    out = np.zeros_like(plus.amps)
    for label, c in coeffs.items():
        out += c * apply_z(plus, scheme.flip_set(label)).amps
    return DenseState(out)


def dense_product(phi: ProductState) -> DenseState:
    _cap(phi.n_edges)
    amps = np.ones(1, dtype=complex)
    for e in range(phi.n_edges):
        amps = np.kron(phi.amps[e], amps)  # later edges are more significant
    return DenseState(amps)


def dense_overlap(s: DenseState, phi: ProductState) -> complex:
    """<psi|phi>, summed pairwise over the support of psi."""
    support = np.nonzero(s.amps)[0]
    prod = np.ones(support.size, dtype=complex)
    for e in range(phi.n_edges):
        bit = (support >> e) & 1
        prod *= np.where(bit == 1, phi.amps[e, 1], phi.amps[e, 0])
    return complex(np.sum(s.amps[support].conj() * prod))


def _tensor(s: DenseState) -> np.ndarray:
    n = s.n_edges
    return s.amps.reshape((2,) * n)  # axis a holds edge n-1-a


def dense_partial_probability(s: DenseState, edges, states) -> float:
    """|| (<phi_E~| x I) psi ||^2 for post-measurement states on ``edges``."""
    n = s.n_edges
    t = _tensor(s)
    axes = [n - 1 - e for e in edges]
    for ax, st in sorted(zip(axes, states), key=lambda p: -p[0]):
        t = np.tensordot(t, np.conj(np.asarray(st, dtype=complex)), axes=([ax], [0]))
    return float(np.sum(np.abs(t) ** 2))


def dense_distribution(s: DenseState, bases) -> np.ndarray:
    """Outcome probabilities for measuring every edge; index bit e = outcome of edge e."""
    n = s.n_edges
    t = _tensor(s)
    bases = np.asarray(bases, dtype=complex)
    for e in range(n):
        ax = n - 1 - e
        m = bases[e].conj()  # rows are <b_k|
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return np.abs(t.reshape(-1)) ** 2


def reduced_density_matrix(s: DenseState, edges) -> np.ndarray:
    """rho on ``edges`` (row index bit i = edge edges[i])."""
    n = s.n_edges
    edges = list(edges)
    keep = [n - 1 - e for e in reversed(edges)]
    rest = [a for a in range(n) if a not in keep]
    t = np.transpose(_tensor(s), keep + rest).reshape(1 << len(edges), -1)
    return t @ t.conj().T


def entanglement_spectrum(s: DenseState, edges) -> np.ndarray:
    """Eigenvalues of rho on ``edges``, via singular values of the bipartite amplitude matrix."""
    n = s.n_edges
    edges = list(edges)
    keep = [n - 1 - e for e in reversed(edges)]
    rest = [a for a in range(n) if a not in keep]
    t = np.transpose(_tensor(s), keep + rest).reshape(1 << len(edges), -1)
    sv = np.linalg.svd(t, compute_uv=False)
    return np.sort(sv**2)[::-1]


def syndrome_classes(g: EmbeddedGraph, prefix) -> dict[int, int]:
    """Count edge subsets of ``prefix`` by boundary syndrome.

    Only subsets with even degree at every vertex touched solely by prefix
    edges are counted; the key is the degree-parity pattern on the boundary
    vertices (touched by both sides), as a bitmask over their sorted order.
    """
    prefix = list(prefix)
    _cap(len(prefix), 22)
    pset = set(prefix)
    inside = {v for e in prefix for v in g.ends[e]}
    outside = {v for e in range(g.n_edges) if e not in pset for v in g.ends[e]}
    boundary = sorted(inside & outside)
    bpos = {v: i for i, v in enumerate(boundary)}
    counts: dict[int, int] = {}
    for sub in range(1 << len(prefix)):
        deg: dict[int, int] = {}
        for i, e in enumerate(prefix):
            if (sub >> i) & 1:
                for v in g.ends[e]:
                    deg[v] = deg.get(v, 0) ^ 1
        if any(p and v not in bpos for v, p in deg.items()):
            continue
        u = sum(1 << bpos[v] for v, p in deg.items() if p)
        counts[u] = counts.get(u, 0) + 1
    return counts


def boundary_vertices(g: EmbeddedGraph, prefix) -> list[int]:
    pset = set(prefix)
    inside = {v for e in pset for v in g.ends[e]}
    outside = {v for e in range(g.n_edges) if e not in pset for v in g.ends[e]}
    return sorted(inside & outside)


def dense_sample(dist: np.ndarray, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.choice(dist.size, size=n, p=dist / dist.sum())
