"""Overlaps of surface-code states with product states, and outcome probabilities.

For a code state sum_alpha c_alpha |X_alpha> and a product state with edge
amplitudes (a_e, b_e),

    <psi|phi> = |E_0|^(-1/2) sum_alpha c*_alpha S_alpha,
    S_alpha   = sum_{x in E_0} (-1)^|x & F_alpha| prod_e t_e(x_e),

with t_e(0) = a_e, t_e(1) = b_e and F_alpha the sum of the chosen
cocycles.  Each S_alpha is a cycle generating function with flipped weights,
hence a combination of the engine's Pfaffians.

Edges where a_e or b_e vanishes are handled exactly by shifting the
summation variable by a fixed cycle y that contains every edge with a_e = 0
and avoids every edge with b_e = 0: x = x' + y turns the weights into
w'_e = t_e(1 - y_e) / t_e(y_e), all finite, and S_alpha picks up
prod_e t_e(y_e) (-1)^{alpha . h(y)}.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .code_states import (
    HANDLE_U,
    CodeState,
    ProductState,
    StateError,
    apply_handles,
    c_to_x,
    pair_parity,
    swap_pairs,
)
from .embedded_graph import EmbeddedGraph
from .homology import EncodingScheme
from .matching_engine import CycleEngine, log_sum
from .pfaffian import from_log

STRATEGIES = ("auto", "x4g", "c2g", "sparse")
DEGENERATE_TOL = 1e-9


class OverlapError(ValueError):
    pass


# -- exact handling of vanishing amplitudes ------------------------------------


def _t_join(n_vertices: int, ends, allowed: list[int], odd: set[int]) -> int | None:
    """Edge set within ``allowed`` whose odd-degree vertices are exactly ``odd``."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_vertices)]
    for e in allowed:
        u, v = ends[e]
        adj[u].append((v, e))
        adj[v].append((u, e))
    seen = [False] * n_vertices
    out = 0
    for root in range(n_vertices):
        if seen[root]:
            continue
        seen[root] = True
        order = [root]
        parent_edge = {root: None}
        parent = {root: None}
        i = 0
        while i < len(order):
            u = order[i]
            i += 1
            for v, e in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    parent_edge[v] = e
                    order.append(v)
        need = {v: (v in odd) for v in order}
        for v in reversed(order):
            if need[v]:
                if parent[v] is None:
                    return None
                out ^= 1 << parent_edge[v]
                need[parent[v]] = not need[parent[v]]
    return out


def cycle_shift(g: EmbeddedGraph, t0: np.ndarray, t1: np.ndarray, tol: float = DEGENERATE_TOL) -> int | None:
    """A cycle y with y_e = 1 where t0 ~ 0 and y_e = 0 where t1 ~ 0.

    Near-zero entries (relative ``tol``) are tried first, then exact zeros
    only.  None means no cycle avoids every exact zero, so every term of the
    cycle sum vanishes.
    """
    scale = np.maximum(np.abs(t0), np.abs(t1))
    for thr in (tol, 0.0):
        one = np.abs(t0) <= thr * scale
        zero = np.abs(t1) <= thr * scale
        if not one.any():
            return 0
        forced = [e for e in range(g.n_edges) if one[e]]
        free = [e for e in range(g.n_edges) if not one[e] and not zero[e]]
        odd: set[int] = set()
        for e in forced:
            odd ^= set(g.ends[e])
        j = _t_join(g.n_vertices, g.ends, free, odd)
        if j is not None:
            return j | gf2.from_indices(forced)
    return None


@dataclass
class ShiftedWeights:
    """Finite weights after the cycle shift, with the pulled-out factor P(y)."""

    weights: np.ndarray
    phase: complex
    logabs: float
    hy: int  # h_k(y) = |y & C'_k| mod 2
    y: int


def shifted_weights(g: EmbeddedGraph, scheme: EncodingScheme, t0, t1) -> ShiftedWeights | None:
    t0 = np.asarray(t0, dtype=complex)
    t1 = np.asarray(t1, dtype=complex)
    y = cycle_shift(g, t0, t1)
    if y is None:
        return None
    ybits = np.array([(y >> e) & 1 for e in range(g.n_edges)], dtype=bool)
    num = np.where(ybits, t0, t1)
    den = np.where(ybits, t1, t0)
    if np.any(den == 0):
        return None
    w = num / den
    logabs = float(np.sum(np.log(np.abs(den))))
    phase = complex(np.prod(den / np.abs(den)))
    hy = sum(gf2.dot(y, c) << k for k, c in enumerate(scheme.cocycles))
    return ShiftedWeights(w, phase, logabs, hy, y)


# -- signed cycle sums -----------------------------------------------------------


def _flip_signs(n: int, hy: int) -> np.ndarray:
    idx = np.arange(n)
    par = np.zeros(n, dtype=np.int64)
    x = idx & hy
    while x.any():
        par ^= x & 1
        x >>= 1
    return 1.0 - 2.0 * par


def _pf_vector(engine: CycleEngine, w, labels, relabel: bool) -> tuple[np.ndarray, float]:
    """Pfaffians for ``labels`` as values scaled by exp(-top), plus top."""
    if relabel:
        raw = engine._many_label(w, labels) if engine.threads > 1 else [engine.pf_label(w, s) for s in labels]
    else:
        raw = engine.pf_many(w, labels)
    logs = [l for p, l in raw if p != 0]
    top = max(logs) if logs else 0.0
    return np.array([from_log(p, l, top) for p, l in raw]), top


def signed_sum(
    engine: CycleEngine, t0, t1, coeffs: dict[int, complex], strategy: str = "sparse"
) -> tuple[complex, float, int]:
    """sum_alpha coeffs[alpha] S_alpha as (phase, log|.|, Pfaffians evaluated).

    ``coeffs`` are X-basis weights.  ``x4g`` evaluates all 4^g Pfaffians and
    contracts them with the explicit 4^g x 4^g sign table; ``c2g`` and
    ``sparse`` need a canonical scheme and go through the C basis.
    """
    g, scheme = engine.graph, engine.scheme
    sw = shifted_weights(g, scheme, t0, t1)
    if sw is None:
        return 0j, -math.inf, 0
    n = engine.n_labels
    vec = np.zeros(n, dtype=complex)
    for k, c in coeffs.items():
        vec[k] += c
    vec *= _flip_signs(n, sw.hy)
    if strategy == "x4g":
        pf, top = _pf_vector(engine, sw.weights, range(n), relabel=False)
        idx = np.arange(n)
        table = np.asarray(engine.table)[idx[:, None] ^ idx[None, :]]  # table[alpha ^ u]
        total = vec @ table @ pf
        count = n
    elif strategy in ("c2g", "sparse"):
        if engine.shift is None:
            raise OverlapError(f"strategy {strategy} needs a canonical encoding scheme")
        v = apply_handles(vec, engine.genus, HANDLE_U.T)
        if strategy == "sparse":
            scale = float(np.max(np.abs(v))) if n else 0.0
            labels = [int(l) for l in np.nonzero(np.abs(v) > 1e-13 * scale)[0]] if scale else []
        else:
            labels = list(range(n))
        if not labels:
            return 0j, -math.inf, 0
        pf, top = _pf_vector(engine, sw.weights, labels, relabel=True)
        signs = np.array([-1.0 if pair_parity(l, engine.genus) else 1.0 for l in labels])
        total = np.sum(v[labels] * signs * pf)
        count = len(labels)
    else:
        raise OverlapError(f"unknown strategy {strategy!r}")
    if total == 0:
        return 0j, -math.inf, count
    return sw.phase * total / abs(total), sw.logabs + top + math.log(abs(total)), count


# -- overlaps ------------------------------------------------------------------


@dataclass
class OverlapResult:
    value: complex
    phase: complex
    logabs: float
    strategy: str
    terms: int
    seconds: float = 0.0
    meta: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "log_abs": self.logabs,
            "strategy": self.strategy,
            "terms": self.terms,
            "seconds": self.seconds,
            **self.meta,
        }


def _check_inputs(state: CodeState, phi: ProductState, g: EmbeddedGraph, scheme: EncodingScheme) -> None:
    if phi.n_edges != g.n_edges:
        raise OverlapError(f"product state has {phi.n_edges} edges, graph has {g.n_edges}")
    if state.genus != g.genus or scheme.genus != g.genus:
        raise OverlapError("state, scheme and graph disagree on the genus")
    if state.basis == "C" and not scheme.canonical:
        raise OverlapError("C-basis state needs a canonical encoding scheme")


def choose_strategy(state: CodeState, scheme: EncodingScheme) -> str:
    if not scheme.canonical:
        return "x4g"
    return "sparse"


def _sparse_c(engine: CycleEngine, state: CodeState, phi: ProductState) -> tuple[complex, float, int]:
    """One relabelled Pfaffian per nonzero C coefficient."""
    sw = shifted_weights(engine.graph, engine.scheme, phi.a, phi.b)
    if sw is None:
        return 0j, -math.inf, 0
    gen = engine.genus
    sh = swap_pairs(sw.hy, gen)
    labels = sorted(l ^ sh for l in state.coeffs)
    if not labels:
        return 0j, -math.inf, 0
    pf, top = _pf_vector(engine, sw.weights, labels, relabel=True)
    total = 0j
    for l, p in zip(labels, pf):
        sign = -1.0 if pair_parity(l, gen) else 1.0
        total += state.coeffs[l ^ sh].conjugate() * sign * p
    if total == 0:
        return 0j, -math.inf, len(labels)
    return sw.phase * total / abs(total), sw.logabs + top + math.log(abs(total)), len(labels)


def overlap(
    state: CodeState,
    phi: ProductState,
    g: EmbeddedGraph,
    scheme: EncodingScheme,
    strategy: str = "auto",
    engine: CycleEngine | None = None,
    threads: int = 1,
) -> OverlapResult:
    """<psi|phi> by the requested evaluation path."""
    if strategy not in STRATEGIES:
        raise OverlapError(f"unknown strategy {strategy!r}")
    _check_inputs(state, phi, g, scheme)
    start = time.perf_counter()
    if strategy == "auto":
        strategy = choose_strategy(state, scheme)
    if strategy in ("c2g", "sparse") and not scheme.canonical:
        raise OverlapError(f"strategy {strategy} needs a canonical encoding scheme")
    engine = engine or CycleEngine(g, scheme, threads=threads)
    if strategy == "sparse" and state.basis == "C":
        phase, logabs, terms = _sparse_c(engine, state, phi)
    else:
        xs = c_to_x(state.with_scheme(scheme)) if state.basis == "C" else state
        coeffs = {k: c.conjugate() for k, c in xs.coeffs.items()}
        phase, logabs, terms = signed_sum(engine, phi.a, phi.b, coeffs, strategy)
    logabs -= 0.5 * engine.log_e0
    value = from_log(phase, logabs)
    return OverlapResult(value, phase, logabs, strategy, terms, time.perf_counter() - start)


def overlap_plus(
    phi: ProductState, g: EmbeddedGraph, scheme: EncodingScheme, engine: CycleEngine | None = None
) -> complex:
    """<+|phi> = N Cy(G, b/a), with vanishing amplitudes handled exactly."""
    return overlap(CodeState("X", g.genus, {0: 1.0}), phi, g, scheme, "x4g" if not scheme.canonical else "sparse", engine).value


# -- outcome records -----------------------------------------------------------


@dataclass
class OutcomeRecord:
    """Measurement outcome and basis per edge; ``corrections`` is O^c.

    ``bases[e, k]`` is the post-measurement state (a, b) for outcome k on
    edge e.  Edges in O^c must report outcome 0.
    """

    outcomes: np.ndarray
    bases: np.ndarray
    corrections: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        self.outcomes = np.asarray(self.outcomes, dtype=np.int8)
        self.bases = np.asarray(self.bases, dtype=complex)
        if self.bases.shape != (len(self.outcomes), 2, 2):
            raise OverlapError("bases must have shape (n_edges, 2, 2)")
        gram = np.einsum("eki,eli->ekl", self.bases.conj(), self.bases)
        if np.max(np.abs(gram - np.eye(2))) > 1e-12:
            raise OverlapError("measurement bases must be orthonormal")
        if np.any((self.outcomes != 0) & (self.outcomes != 1)):
            raise OverlapError("outcomes must be bits")
        for e in self.corrections:
            if self.outcomes[e] != 0:
                raise OverlapError("edges in O^c are fixed to outcome 0")

    @property
    def n_edges(self) -> int:
        return len(self.outcomes)

    def product_state(self) -> ProductState:
        idx = np.arange(self.n_edges)
        return ProductState(self.bases[idx, self.outcomes], check=False)


def output_probability(
    state: CodeState,
    record: OutcomeRecord,
    g: EmbeddedGraph,
    scheme: EncodingScheme,
    strategy: str = "auto",
    engine: CycleEngine | None = None,
) -> float:
    """P(o) = 2^|O^c| |<psi|phi(record)>|^2 under the generalized-flow assumption."""
    if record.n_edges != g.n_edges:
        raise OverlapError("record must cover every edge")
    res = overlap(state, record.product_state(), g, scheme, strategy, engine)
    if res.phase == 0:
        return 0.0
    return math.exp(2 * res.logabs + len(record.corrections) * math.log(2))
