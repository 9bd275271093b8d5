"""Cycle generating functions through perfect matchings and Pfaffians.

``G`` is turned into a graph ``G'`` whose perfect matchings are in bijection
with the cycles of ``G`` (Fisher's construction), ``G'`` gets an orientation
in which every face walk has an odd number of forward edges, and the cycle
sum is a signed combination of Pfaffians over the 4^g sign patterns obtained
by flipping encoding cocycles.

The combination coefficients are found once per (graph, scheme) by
calibrating against unit weights, where every homology class holds exactly
|E_0|/4^g cycles.  For a canonical scheme the table reduces to
kappa * (-1)^(alpha.beta) / 2^g after relabelling, which is checked.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import reverse_cuthill_mckee

from . import gf2
from .embedded_graph import EmbeddedGraph
from .homology import EncodingScheme
from .pfaffian import SparseSkew, from_log, pfaffian_frontal


class EngineError(RuntimeError):
    """Numerical or structural failure inside the Pfaffian machinery."""


# -- Fisher transform ----------------------------------------------------------


def prune_leaves(g: EmbeddedGraph) -> tuple[set[int], set[int]]:
    """Repeatedly strip degree-one vertices; returns (kept vertices, kept edges)."""
    deg = [g.degree(v) for v in range(g.n_vertices)]
    alive_e = [True] * g.n_edges
    stack = [v for v in range(g.n_vertices) if deg[v] == 1]
    while stack:
        v = stack.pop()
        if deg[v] != 1:
            continue
        for d in g.rotation[v]:
            e = d >> 1
            if alive_e[e]:
                alive_e[e] = False
                deg[v] -= 1
                w = g.head(d)
                deg[w] -= 1
                if deg[w] == 1:
                    stack.append(w)
                break
    edges = {e for e in range(g.n_edges) if alive_e[e]}
    verts = {v for v in range(g.n_vertices) if deg[v] > 0}
    return verts, edges


@dataclass
class FisherGraph:
    """Matching graph G' of a surface graph G.

    ``source[e']`` is the G edge carried by G' edge ``e'`` (weight w_e) or -1
    for an internal edge of weight 1.  ``cuts[e']`` is the bitmask of
    encoding cocycles containing that G edge.  ``orient[e']`` is +1 when the
    base orientation runs from ``ends[e'][0]`` to ``ends[e'][1]``.
    """

    graph: EmbeddedGraph | None
    source: list[int]
    cuts: list[int]
    orient: list[int] = field(default_factory=list)
    order: list[int] = field(default_factory=list)

    @property
    def n_vertices(self) -> int:
        return 0 if self.graph is None else self.graph.n_vertices

    @property
    def external(self) -> list[int]:
        return [k for k, s in enumerate(self.source) if s >= 0]


def fisher_transform(g: EmbeddedGraph, scheme: EncodingScheme | None = None) -> FisherGraph:
    """Build G' with the degree-2, degree-3 gadget and chain-splitting rules."""
    verts, edges = prune_leaves(g)
    rot: list[list] = []
    ends: list[tuple[int, int]] = []
    source: list[int] = []
    holder: dict = {}  # placeholder key -> vertex whose rotation holds it

    def vertex() -> int:
        rot.append([])
        return len(rot) - 1

    def edge(u: int, v: int, src: int) -> int:
        ends.append((u, v))
        source.append(src)
        return len(ends) - 1

    def gadget(keys) -> None:
        t = [vertex() for _ in range(3)]
        i = [vertex() for _ in range(3)]
        spoke = [edge(t[k], i[k], -1) for k in range(3)]
        ring = [edge(i[k], i[(k + 1) % 3], -1) for k in range(3)]
        for k in range(3):
            rot[t[k]] = [keys[k], 2 * spoke[k]]
            holder[keys[k]] = t[k]
            rot[i[k]] = [2 * spoke[k] + 1, 2 * ring[k], 2 * ring[(k - 1) % 3] + 1]

    links = 0
    for v in sorted(verts):
        darts = [d for d in g.rotation[v] if (d >> 1) in edges]
        n = len(darts)
        keys = [("d", d) for d in darts]
        if n == 2:
            t0, t1 = vertex(), vertex()
            mid = edge(t0, t1, -1)
            rot[t0] = [keys[0], 2 * mid]
            rot[t1] = [keys[1], 2 * mid + 1]
            holder[keys[0]] = t0
            holder[keys[1]] = t1
            continue
        if n == 3:
            gadget(keys)
            continue
        # chain of n-2 degree-3 nodes, node k sits near dart k+1
        chain = []
        first = links
        links += n - 3
        for k in range(n - 2):
            if k == 0:
                chain.append([keys[0], keys[1], ("l", first, 0)])
            elif k == n - 3:
                chain.append([keys[n - 2], keys[n - 1], ("l", first + k - 1, 1)])
            else:
                chain.append([keys[k + 1], ("l", first + k, 0), ("l", first + k - 1, 1)])
        for node in chain:
            gadget(node)
    fill: dict = {}
    for e in sorted(edges):
        k = edge(holder[("d", 2 * e)], holder[("d", 2 * e + 1)], e)
        fill[("d", 2 * e)] = 2 * k
        fill[("d", 2 * e + 1)] = 2 * k + 1
    for lid in range(links):
        k = edge(holder[("l", lid, 0)], holder[("l", lid, 1)], -1)
        fill[("l", lid, 0)] = 2 * k
        fill[("l", lid, 1)] = 2 * k + 1
    rotation = [[fill[x] if isinstance(x, tuple) else x for x in r] for r in rot]
    if scheme is not None:
        cuts = [scheme.incidence(s) if s >= 0 else 0 for s in source]
    else:
        cuts = [0] * len(source)
    if not rotation:
        return FisherGraph(None, source, cuts)
    gp = EmbeddedGraph(len(rotation), ends, rotation)
    if gp.genus != g.genus:
        raise EngineError(f"matching graph has genus {gp.genus}, expected {g.genus}")
    if gp.n_vertices % 2:
        raise EngineError("matching graph has an odd vertex count")
    fg = FisherGraph(gp, source, cuts)
    fg.orient = kasteleyn_orientation(gp)
    fg.order = banded_order(gp)
    return fg


def kasteleyn_orientation(g: EmbeddedGraph) -> list[int]:
    """Orientation with an odd number of forward edges on every face walk.

    All edges start forward; a BFS tree of the dual fixes faces from the
    leaves inward by flipping each face's tree edge.  The root face comes
    out right because the vertex count is even.
    """
    orient = [1] * g.n_edges
    nf = g.n_faces
    parent_edge = [-1] * nf
    seen = [False] * nf
    seen[0] = True
    order = [0]
    for f in order:
        for d in g.faces[f]:
            h = g.face_of[d ^ 1]
            if not seen[h]:
                seen[h] = True
                parent_edge[h] = d >> 1
                order.append(h)

    def forward(f: int) -> int:
        c = 0
        for d in g.faces[f]:
            if (orient[d >> 1] == 1) == (d % 2 == 0):
                c += 1
        return c

    for f in reversed(order[1:]):
        if forward(f) % 2 == 0:
            orient[parent_edge[f]] *= -1
    if forward(0) % 2 == 0:
        raise EngineError("root face parity failed; vertex count must be even")
    return orient


def banded_order(g: EmbeddedGraph) -> list[int]:
    """Reverse Cuthill-McKee order of G' to keep the elimination front thin."""
    n = g.n_vertices
    rows = [u for u, _ in g.ends] + [v for _, v in g.ends]
    cols = [v for _, v in g.ends] + [u for u, _ in g.ends]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return [int(x) for x in reverse_cuthill_mckee(adj, symmetric_mode=True)]


def relevant_weights(fg: FisherGraph, w, alpha: int = 0, beta: int = 0, genus: int | None = None) -> SparseSkew:
    """Skew matrix of G' under the base orientation with cocycle sign flips.

    ``alpha`` bit j flips cocycle 2j+1 (1-based odd) and ``beta`` bit j
    flips cocycle 2j+2.
    """
    if genus is not None and (alpha >> genus or beta >> genus):
        raise ValueError("bitstring longer than the genus")
    label = 0
    for j in range(max(alpha.bit_length(), beta.bit_length())):
        label |= ((alpha >> j) & 1) << (2 * j)
        label |= ((beta >> j) & 1) << (2 * j + 1)
    return skew_matrix(fg, w, label)


def skew_matrix(fg: FisherGraph, w, label: int = 0) -> SparseSkew:
    gp = fg.graph
    m = SparseSkew(0 if gp is None else gp.n_vertices)
    if gp is None:
        return m
    for k, (u, v) in enumerate(gp.ends):
        s = fg.source[k]
        val = 1.0 + 0j if s < 0 else complex(w[s])
        if fg.cuts[k] & label and gf2.parity(fg.cuts[k] & label):
            val = -val
        m.add(u, v, fg.orient[k] * val)
    return m


# -- calibrated engine -----------------------------------------------------------


def walsh_matrix(n_bits: int) -> np.ndarray:
    """H[s, h] = (-1)^popcount(s & h) for s, h < 2^n_bits."""
    size = 1 << n_bits
    idx = np.arange(size)
    anded = idx[:, None] & idx[None, :]
    par = np.zeros_like(anded)
    x = anded.copy()
    while x.any():
        par ^= x & 1
        x >>= 1
    return 1.0 - 2.0 * par


def pair_form(label: int, genus: int) -> int:
    """alpha . beta for a label with alpha_j at bit 2j and beta_j at bit 2j+1."""
    q = 0
    for j in range(genus):
        q ^= (label >> (2 * j)) & (label >> (2 * j + 1)) & 1
    return q


class CycleEngine:
    """Evaluate Pf_s and the cycle generating function for one graph and scheme.

    ``table[s]`` is the coefficient of Pf_s in Cy.  When the scheme is
    canonical, ``shift`` and ``kappa`` satisfy
    table[s] = kappa * (-1)^(q(s ^ shift)) / 2^g, and ``pf_label`` exposes
    the relabelled Pfaffians kappa * Pf_(label ^ shift).
    """

    def __init__(self, g: EmbeddedGraph, scheme: EncodingScheme, threads: int = 1) -> None:
        self.graph = g
        self.scheme = scheme
        self.genus = g.genus
        self.n_labels = 1 << (2 * self.genus)
        self.threads = max(1, int(threads))
        self.log_e0 = (g.n_edges - g.n_vertices + 1) * math.log(2)
        self.fisher = fisher_transform(g, scheme)
        self._calibrate()

    # raw Pfaffians

    def _rows(self, w, label: int) -> list[dict[int, complex]]:
        return skew_matrix(self.fisher, w, label).rows

    def pf(self, w, label: int = 0) -> tuple[complex, float]:
        if self.fisher.graph is None:
            return 1 + 0j, 0.0
        return pfaffian_frontal(self._rows(w, label), self.fisher.order)

    def pf_many(self, w, labels) -> list[tuple[complex, float]]:
        labels = list(labels)
        if self.threads > 1 and len(labels) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                return list(pool.map(lambda s: self.pf(w, s), labels))
        return [self.pf(w, s) for s in labels]

    # calibration

    def _calibrate(self) -> None:
        n = self.n_labels
        ones = [1.0] * self.graph.n_edges
        raw = self.pf_many(ones, range(n))
        vals = np.array([from_log(p, l, self.log_e0) for p, l in raw])
        h = walsh_matrix(2 * self.genus)
        f = h @ vals / n  # eta(h) * Z_h / |E_0|
        target = 1.0 / n
        if np.max(np.abs(np.abs(f) - target)) > 1e-6 * target or np.max(np.abs(f.imag)) > 1e-6 * target:
            raise EngineError("homology class signs are not uniform; orientation is not Kasteleyn")
        eta = np.sign(f.real)
        self.eta = eta
        self.table = h @ eta / n
        self.shift = None
        self.kappa = 0
        if self.scheme.canonical:
            scale = 1 << self.genus
            q = np.array([pair_form(s, self.genus) for s in range(n)])
            for s0 in range(n):
                pattern = 1.0 - 2.0 * q[np.arange(n) ^ s0]
                kappa = self.table[0] * scale / pattern[0]
                if np.allclose(self.table * scale, kappa * pattern, atol=1e-9):
                    self.shift = s0
                    self.kappa = int(round(kappa))
                    break
            if self.shift is None:
                raise EngineError("canonical scheme did not yield the paired sign table")

    # derived quantities

    def pf_label(self, w, label: int) -> tuple[complex, float]:
        """kappa * Pf_(label ^ shift): the relabelled Pfaffian for canonical schemes."""
        if self.shift is None:
            raise EngineError("relabelled Pfaffians need a canonical scheme")
        p, l = self.pf(w, label ^ self.shift)
        return p * self.kappa, l

    def combine(self, coeffs: dict[int, complex], w, relabel: bool = False) -> tuple[complex, float]:
        """sum_label coeffs[label] * Pf_label(w), evaluated in log scale."""
        labels = [s for s, c in coeffs.items() if c != 0]
        if relabel:
            raw = [self.pf_label(w, s) for s in labels] if self.threads == 1 else self._many_label(w, labels)
        else:
            raw = self.pf_many(w, labels)
        return log_sum([(coeffs[s] * p, l) for s, (p, l) in zip(labels, raw)])

    def _many_label(self, w, labels):
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(lambda s: self.pf_label(w, s), labels))

    def cycle_sum(self, w) -> tuple[complex, float]:
        """Cy(G, w) as (phase, log|.|)."""
        coeffs = {s: complex(c) for s, c in enumerate(self.table) if abs(c) > 1e-12}
        return self.combine(coeffs, w)


def log_sum(terms) -> tuple[complex, float]:
    """Sum of c_i * exp(l_i) for (c_i, l_i) pairs, returned as (phase, log|.|)."""
    terms = [(c, l) for c, l in terms if c != 0 and l != -math.inf]
    if not terms:
        return 0j, -math.inf
    top = max(l for _, l in terms)
    total = sum(c * math.exp(l - top) for c, l in terms)
    if total == 0:
        return 0j, -math.inf
    return total / abs(total), top + math.log(abs(total))


def cycle_generating_function(g: EmbeddedGraph, scheme: EncodingScheme, w, engine: CycleEngine | None = None) -> complex:
    engine = engine or CycleEngine(g, scheme)
    phase, logabs = engine.cycle_sum(w)
    return from_log(phase, logabs)
