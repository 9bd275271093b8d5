"""Sequential sampling of measurement records on punctured-cylinder codes.

The probability of outcomes on a measured prefix E~ (the rest E^ traced
out) is a signed cycle sum on the doubled graph: two copies of the prefix
subgraph glued at the boundary vertices shared with E^, the second copy
mirrored.  Cycles of the doubled graph are exactly the pairs (x1, x2) of
prefix edge sets with equal boundary syndromes, which is what the partial
trace pairs up.

For the trace over E^ to leave a sign, the flip set F_lambda of
lambda = alpha + beta must restrict to a cut delta(S_lambda) of the E^
subgraph; the compatible lambda form a subspace L.  Then
F'_lambda = F_lambda + delta_G(S_lambda) is a homologous cocycle living
inside the prefix, and

    p = |Z(E^)| / |E_0| * sum_{beta, lambda in L} c_{beta+lambda} c*_beta
        * sum_{(x1,x2)} f*(x1) f(x2) (-1)^{(x1+x2).F~_beta + x1.F'_lambda},

where f is the product of post-measurement amplitudes.  Both sign patterns
are cocycles of the doubled graph, so each inner sum is a cycle sum on it
with flipped weights, i.e. a handful of Pfaffians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import gf2
from .code_states import CodeState, ProductState, apply_handles, HANDLE_U, c_to_x
from .embedded_graph import EdgeLayout, EmbeddedGraph
from .homology import EncodingScheme, canonical_encoding_scheme
from .matching_engine import CycleEngine, log_sum
from .overlap import overlap, signed_sum

DEAD_BRANCH = 1e-14


class SamplerError(RuntimeError):
    pass


class PlanError(ValueError):
    """Malformed plan or plan file."""


# -- plans ---------------------------------------------------------------------


BasisRule = Callable[[int, dict[int, int]], np.ndarray]


@dataclass
class MeasurementPlan:
    """Measurement order and per-edge bases.

    ``bases[e, k]`` is the post-measurement state (a, b) for outcome k.  An
    adaptive ``rule(edge, prior_outcomes)`` overrides ``bases`` when given;
    it must be pure.
    """

    order: list[int]
    bases: np.ndarray | None = None
    rule: BasisRule | None = None

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(len(self.order))):
            raise PlanError("plan order must visit every edge exactly once")
        if self.bases is None and self.rule is None:
            raise PlanError("plan needs bases or a basis rule")
        if self.bases is not None:
            self.bases = np.asarray(self.bases, dtype=complex)
            if self.bases.shape != (len(self.order), 2, 2):
                raise PlanError("bases must have shape (n_edges, 2, 2)")
            _check_orthonormal(self.bases)

    def basis(self, e: int, prior: dict[int, int]) -> np.ndarray:
        if self.rule is not None:
            b = np.asarray(self.rule(e, dict(prior)), dtype=complex)
            _check_orthonormal(b[None])
            return b
        return self.bases[e]

    @classmethod
    def ltor(cls, layout: EdgeLayout, bases=None, rule: BasisRule | None = None) -> "MeasurementPlan":
        return cls(layout.ltor_order(), bases, rule)

    @classmethod
    def random_fixed(cls, order: Sequence[int], rng: np.random.Generator, spread: float = math.pi) -> "MeasurementPlan":
        """Random orthonormal bases; ``spread`` caps the polar angle away from Z."""
        n = len(order)
        theta = rng.uniform(0, spread, size=n)
        phi = rng.uniform(0, 2 * math.pi, size=n)
        b0 = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)
        b1 = np.stack([-np.exp(-1j * phi) * np.sin(theta / 2), np.cos(theta / 2)], axis=1)
        return cls(list(order), np.stack([b0, b1], axis=1))

    def format(self) -> str:
        if self.bases is None:
            raise PlanError("adaptive plans have no file form")
        lines = ["order " + " ".join(str(e) for e in self.order)]
        for e in range(len(self.order)):
            vals = []
            for k in (0, 1):
                for z in self.bases[e, k]:
                    vals += [repr(float(z.real)), repr(float(z.imag))]
            lines.append(f"basis {e} " + " ".join(vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, layout: EdgeLayout | None = None) -> "MeasurementPlan":
        order = None
        rows: dict[int, np.ndarray] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "order":
                if tok[1:] == ["LtoR"]:
                    if layout is None:
                        raise PlanError("'order LtoR' needs a punctured-cylinder layout")
                    order = layout.ltor_order()
                else:
                    order = [int(t) for t in tok[1:]]
            elif tok[0] == "basis":
                if len(tok) != 10:
                    raise PlanError(f"line {lineno}: basis needs 8 numbers")
                v = [float(t) for t in tok[2:]]
                rows[int(tok[1])] = np.array(
                    [[complex(v[0], v[1]), complex(v[2], v[3])], [complex(v[4], v[5]), complex(v[6], v[7])]]
                )
            else:
                raise PlanError(f"line {lineno}: unknown record {tok[0]!r}")
        if order is None:
            raise PlanError("plan file needs an order line")
        if sorted(rows) != sorted(order):
            raise PlanError("plan needs one basis line per edge")
        return cls(order, np.stack([rows[e] for e in range(len(order))]))


def _check_orthonormal(bases: np.ndarray) -> None:
    gram = np.einsum("eki,eli->ekl", bases.conj(), bases)
    if np.max(np.abs(gram - np.eye(2))) > 1e-12:
        raise PlanError("measurement basis is not orthonormal")


# -- doubled graph -------------------------------------------------------------


def _components(n_vertices: int, ends, edges) -> list[int]:
    comp = list(range(n_vertices))

    def find(a: int) -> int:
        while comp[a] != a:
            comp[a] = comp[comp[a]]
            a = comp[a]
        return a

    for e in edges:
        u, v = ends[e]
        comp[find(u)] = find(v)
    return [find(v) for v in range(n_vertices)]


def _connected(g: EmbeddedGraph, edges) -> bool:
    edges = list(edges)
    if not edges:
        return True
    comp = _components(g.n_vertices, g.ends, edges)
    roots = {comp[v] for e in edges for v in g.ends[e]}
    return len(roots) == 1


@dataclass
class EffectiveStep:
    """Everything about one prefix that does not depend on outcomes."""

    prefix: tuple[int, ...]
    graph: EmbeddedGraph
    scheme: EncodingScheme
    engine: CycleEngine
    copy1: dict[int, int]  # G edge -> doubled edge, first copy
    copy2: dict[int, int]
    boundary: tuple[int, ...]
    lambda_basis: tuple[int, ...]  # basis of L as original labels
    gen_flip: tuple[int, ...]  # per generator: which residual patterns it uses
    gen_label: tuple[int, ...]  # per generator: doubled-scheme label of its cocycle part
    residual: tuple[int, ...]  # doubled edge sets applied as explicit weight flips
    log_ratio: float  # log(|Z(E^)| / |E_0|)
    mode: str
    aux: dict = field(default_factory=dict)

    @property
    def genus(self) -> int:
        return self.graph.genus


def doubled_graph(g: EmbeddedGraph, prefix: Sequence[int]) -> tuple[EmbeddedGraph, dict[int, int], dict[int, int], list[int]]:
    """Glue the prefix subgraph to its mirror image along the boundary vertices.

    At a boundary vertex each maximal run of prefix darts in the rotation is
    followed by its mirrored copy, so every straddling face of G becomes one
    face that runs through the prefix part and back through the mirror.
    """
    pset = set(prefix)
    plist = sorted(pset)
    inside = {v for e in plist for v in g.ends[e]}
    outside = {v for e in range(g.n_edges) if e not in pset for v in g.ends[e]}
    boundary = sorted(inside & outside)
    bset = set(boundary)
    v1: dict[int, int] = {}
    v2: dict[int, int] = {}
    for v in sorted(inside):
        v1[v] = len(v1)
    nv = len(v1)
    for v in sorted(inside):
        if v in bset:
            v2[v] = v1[v]
        else:
            v2[v] = nv
            nv += 1
    n = len(plist)
    copy1 = {e: i for i, e in enumerate(plist)}
    copy2 = {e: n + i for i, e in enumerate(plist)}
    ends = [(v1[g.ends[e][0]], v1[g.ends[e][1]]) for e in plist]
    ends += [(v2[g.ends[e][0]], v2[g.ends[e][1]]) for e in plist]

    def m1(d: int) -> int:
        return 2 * copy1[d >> 1] + (d & 1)

    def m2(d: int) -> int:
        return 2 * copy2[d >> 1] + (d & 1)

    rotation: list[list[int]] = [[] for _ in range(nv)]
    for v in sorted(inside):
        darts = g.rotation[v]
        if v not in bset:
            rotation[v1[v]] = [m1(d) for d in darts]
            rotation[v2[v]] = [m2(d) for d in reversed(darts)]
            continue
        k = len(darts)
        start = next(i for i in range(k) if (darts[i] >> 1) not in pset)
        seq = darts[start + 1 :] + darts[: start + 1]
        out: list[int] = []
        block: list[int] = []
        for d in seq:
            if (d >> 1) in pset:
                block.append(d)
            elif block:
                out += [m1(x) for x in block] + [m2(x) for x in reversed(block)]
                block = []
        if block:
            out += [m1(x) for x in block] + [m2(x) for x in reversed(block)]
        rotation[v1[v]] = out
    return EmbeddedGraph(nv, ends, rotation), copy1, copy2, boundary


def _cut_side(g: EmbeddedGraph, rest: list[int], flips: int) -> int | None:
    """Vertex set S (bitmask) with delta(S) restricted to ``rest`` equal to ``flips & rest``."""
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in rest:
        u, v = g.ends[e]
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    side: dict[int, int] = {}
    for root in adj:
        if root in side:
            continue
        side[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for v, e in adj[u]:
                want = side[u] ^ ((flips >> e) & 1)
                if v not in side:
                    side[v] = want
                    stack.append(v)
                elif side[v] != want:
                    return None
    return sum(1 << v for v, s in side.items() if s)


def _star_sum(g: EmbeddedGraph, vmask: int) -> int:
    out = 0
    for v in gf2.bits_of(vmask):
        out ^= g.star(v)
    return out


def build_step(g: EmbeddedGraph, scheme: EncodingScheme, prefix: Sequence[int], threads: int = 1, slots=None, layout=None) -> EffectiveStep:
    prefix = tuple(prefix)
    pset = set(prefix)
    rest = [e for e in range(g.n_edges) if e not in pset]
    if not _connected(g, prefix) or not _connected(g, rest):
        raise SamplerError("measured and unmeasured edge sets must both be connected")
    dg, copy1, copy2, boundary = doubled_graph(g, prefix)
    n2 = 2 * scheme.genus

    def lift(mask: int, second: bool) -> int:
        out = 0
        for e in gf2.bits_of(mask):
            if e in pset:
                out |= 1 << copy1[e]
                if second:
                    out |= 1 << copy2[e]
        return out

    # lambda must pair trivially with every cycle of the unmeasured subgraph
    rest_vertices = sorted({v for e in rest for v in g.ends[e]})
    rows = [0] * len(rest_vertices)
    pos = {v: i for i, v in enumerate(rest_vertices)}
    for j, e in enumerate(rest):
        for v in g.ends[e]:
            rows[pos[v]] ^= 1 << j
    z_rest = gf2.nullspace(rows, len(rest))
    pair_rows = []
    for z in z_rest:
        zmask = sum(1 << rest[j] for j in gf2.bits_of(z))
        pair_rows.append(sum(gf2.dot(zmask, c) << k for k, c in enumerate(scheme.cocycles)))
    lam_basis = gf2.nullspace(pair_rows, n2) if pair_rows else [1 << k for k in range(n2)]

    generators = [lift(c, True) for c in scheme.cocycles]
    moved = []
    for lam in lam_basis:
        f = scheme.flip_set(lam)
        s = _cut_side(g, rest, f)
        if s is None:
            raise SamplerError("flip set does not restrict to a cut of the unmeasured subgraph")
        fp = f ^ _star_sum(g, s)
        if any((fp >> e) & 1 for e in rest):
            raise SamplerError("re-routed cocycle leaks into the unmeasured region")
        moved.append(fp)
        generators.append(lift(fp, False))
    dscheme = canonical_encoding_scheme(dg)
    gen_flip, gen_label, residual = _split_generators(dg, dscheme, generators)
    log_e0 = (g.n_edges - g.n_vertices + 1) * math.log(2)
    log_rest = (len(rest) - len(rest_vertices) + 1) * math.log(2)
    mode = "between-holes"
    if layout is not None and slots:
        for j, (x, y, k) in enumerate(slots):
            twist = layout.vertex(y, x + k - 1)
            support = {e for e, sj in layout.slot_of_edge.items() if sj == j}
            support |= {d >> 1 for d in g.rotation[twist]}
            if support & pset and support - pset:
                mode = "crossing-hole"
    step = EffectiveStep(
        prefix,
        dg,
        dscheme,
        CycleEngine(dg, dscheme, threads=threads),
        copy1,
        copy2,
        tuple(boundary),
        tuple(lam_basis),
        gen_flip,
        gen_label,
        residual,
        log_rest - log_e0,
        mode,
    )
    if dg.genus > 2 * g.genus:
        raise SamplerError(f"doubled graph has genus {dg.genus} > 2g")
    step.aux["moved_cocycles"] = moved
    return step


def _split_generators(dg: EmbeddedGraph, dscheme: EncodingScheme, generators: Sequence[int]):
    """Write every sign pattern as (cocycle of the doubled graph) + (residual).

    The residual patterns are a subset of the generators whose face parities
    span those of all generators; they are applied as weight flips.  The
    cocycle part becomes a relabelling of the doubled scheme's Pfaffians.
    """
    face_masks = [dg.face_boundary(f) for f in range(dg.n_faces)]

    def face_parity(y: int) -> int:
        return sum(gf2.dot(y, fm) << i for i, fm in enumerate(face_masks))

    def coords(y: int) -> int:
        return sum(gf2.dot(y, c) << k for k, c in enumerate(dscheme.cycles))

    basis = gf2.Basis()
    residual: list[int] = []
    for y in generators:
        fp = face_parity(y)
        if not basis.contains(fp):
            basis.add(fp)
            residual.append(y)
    flips, labels = [], []
    for y in generators:
        combo = basis.express(face_parity(y))
        rest = y
        for q in gf2.bits_of(combo):
            rest ^= residual[q]
        if face_parity(rest):
            raise SamplerError("residual split failed")
        flips.append(combo)
        labels.append(coords(rest))
    return tuple(flips), tuple(labels), tuple(residual)


def _xor_span(vectors: Sequence[int], images: Sequence[tuple[int, int]]):
    """All (combination, image) pairs over the span of ``vectors``; images add componentwise."""
    out = [(0, (0, 0))]
    for v, (r, m) in zip(vectors, images):
        out += [(a ^ v, (b ^ r, c ^ m)) for a, (b, c) in out]
    return out


def effective_coefficients(state: CodeState, step: EffectiveStep, scheme: EncodingScheme) -> dict[int, dict[int, complex]]:
    """Doubled-graph X-basis coefficients, grouped by residual flip pattern.

    Entry [r][m] collects c_{beta+lambda} c*_beta over the (beta, lambda)
    whose sign pattern has residual combination r and cocycle label m.
    """
    xs = c_to_x(state.with_scheme(scheme)) if state.basis == "C" else state
    c = xs.coeffs
    n2 = 2 * state.genus
    pairs = list(zip(step.gen_flip, step.gen_label))
    beta_img = dict(_xor_span([1 << k for k in range(n2)], pairs[:n2]))
    lams = _xor_span(step.lambda_basis, pairs[n2:])
    out: dict[int, dict[int, complex]] = {}
    for beta, cb in c.items():
        rb, mb = beta_img[beta]
        for lam, (rl, ml) in lams:
            ca = c.get(beta ^ lam)
            if ca is None:
                continue
            group = out.setdefault(rb ^ rl, {})
            key = mb ^ ml
            group[key] = group.get(key, 0) + ca * cb.conjugate()
    return {r: {k: v for k, v in grp.items() if v != 0} for r, grp in out.items()}


def closure_terms(coeffs: dict[int, dict[int, complex]], genus: int) -> int:
    """Number of C-basis terms in the effective state; 1 means a single Pfaffian per step."""
    total = 0
    for grp in coeffs.values():
        if not grp:
            continue
        vec = np.zeros(1 << (2 * genus), dtype=complex)
        for k, v in grp.items():
            vec[k] = v
        c = apply_handles(vec, genus, HANDLE_U.T)
        scale = float(np.max(np.abs(c)))
        if scale:
            total += int(np.sum(np.abs(c) > 1e-12 * scale))
    return total


def step_probability(
    state: CodeState, scheme: EncodingScheme, step: EffectiveStep, states: Sequence[np.ndarray], coeffs=None
) -> tuple[float, int]:
    """p(prefix outcomes) and the number of Pfaffians used; ``states[i]`` is the post-measurement state of prefix[i]."""
    coeffs = effective_coefficients(state, step, scheme) if coeffs is None else coeffs
    ne = step.graph.n_edges
    t0 = np.zeros(ne, dtype=complex)
    t1 = np.zeros(ne, dtype=complex)
    for e, st in zip(step.prefix, states):
        i, j = step.copy1[e], step.copy2[e]
        t0[i], t1[i] = np.conj(st[0]), np.conj(st[1])
        t0[j], t1[j] = st[0], st[1]
    terms = []
    count = 0
    for r, grp in sorted(coeffs.items()):
        if not grp:
            continue
        flip = 0
        for q in gf2.bits_of(r):
            flip ^= step.residual[q]
        sign = np.array([-1.0 if (flip >> i) & 1 else 1.0 for i in range(ne)])
        phase, logabs, n = signed_sum(step.engine, t0, t1 * sign, grp, "sparse")
        count += n
        terms.append((phase, logabs))
    phase, logabs = log_sum(terms)
    if phase == 0:
        return 0.0, count
    val = phase * math.exp(logabs + step.log_ratio)
    if abs(val.imag) > 1e-8 * max(abs(val.real), 1e-300) and abs(val.imag) > 1e-12:
        raise SamplerError(f"partial probability has imaginary part {val.imag:.3g}")
    return float(val.real), count


# -- sampler -------------------------------------------------------------------


@dataclass
class SampleTrace:
    seed: int
    outcomes: dict[int, int]
    conditionals: list[float]
    log_prob: float

    def bitstring(self, n_edges: int) -> str:
        return "".join(str(self.outcomes[e]) for e in range(n_edges))


class Sampler:
    """Chain-rule sampler over the plan order with per-prefix caches."""

    def __init__(
        self,
        state: CodeState,
        g: EmbeddedGraph,
        scheme: EncodingScheme,
        plan: MeasurementPlan,
        threads: int = 1,
        layout: EdgeLayout | None = None,
        slots=None,
    ) -> None:
        if len(plan.order) != g.n_edges:
            raise PlanError("plan does not cover the graph")
        state.check_normalized()
        self.state = state
        self.graph = g
        self.scheme = scheme
        self.plan = plan
        self.threads = threads
        self.layout = layout
        self.slots = slots
        self._steps: dict[int, EffectiveStep] = {}
        self._coeffs: dict[int, dict[int, dict[int, complex]]] = {}
        self._engine: CycleEngine | None = None
        self._memo: dict[tuple[int, ...], float] = {(): 1.0}
        self.pfaffians = 0

    def step(self, k: int) -> EffectiveStep:
        if k not in self._steps:
            self._steps[k] = build_step(self.graph, self.scheme, self.plan.order[:k], self.threads, self.slots, self.layout)
            self._coeffs[k] = effective_coefficients(self.state, self._steps[k], self.scheme)
        return self._steps[k]

    def closure_holds(self, k: int) -> bool:
        self.step(k)
        return closure_terms(self._coeffs[k], self._steps[k].genus) == 1

    def _states(self, outcomes: Sequence[int]) -> list[np.ndarray]:
        prior: dict[int, int] = {}
        out = []
        for e, o in zip(self.plan.order, outcomes):
            out.append(self.plan.basis(e, prior)[o])
            prior[e] = o
        return out

    def probability(self, outcomes: Sequence[int]) -> float:
        """p of the first len(outcomes) plan edges having these outcomes."""
        key = tuple(int(o) for o in outcomes)
        if key in self._memo:
            return self._memo[key]
        k = len(key)
        states = self._states(key)
        if k == self.graph.n_edges:
            if self._engine is None:
                self._engine = CycleEngine(self.graph, self.scheme, self.threads)
            amps = np.zeros((k, 2), dtype=complex)
            for e, st in zip(self.plan.order, states):
                amps[e] = st
            res = overlap(self.state.with_scheme(self.scheme), ProductState(amps, check=False), self.graph, self.scheme, engine=self._engine)
            p = math.exp(2 * res.logabs) if res.phase != 0 else 0.0
            self.pfaffians += res.terms
        else:
            step = self.step(k)
            p, terms = step_probability(self.state, self.scheme, step, states, self._coeffs[k])
            self.pfaffians += terms
        if p < -1e-10:
            raise SamplerError(f"negative partial probability {p:.3g}")
        self._memo[key] = p
        return p

    def conditional(self, prior: Sequence[int], outcome: int) -> float:
        den = self.probability(prior)
        if den < DEAD_BRANCH:
            raise SamplerError("conditional on a numerically dead branch")
        p0 = self.probability(list(prior) + [0]) / den
        return p0 if outcome == 0 else 1.0 - p0

    def sample(self, seed: int, uniforms: np.ndarray | None = None) -> SampleTrace:
        """One record; ``uniforms[k]`` drives the k-th draw (default: seeded Philox stream)."""
        n = self.graph.n_edges
        if uniforms is None:
            uniforms = stream_uniforms(seed, 1, n)[0]
        outs: list[int] = []
        conds = []
        logp = 0.0
        for k in range(n):
            p0 = self.conditional(outs, 0)
            if not -1e-10 <= p0 <= 1 + 1e-10:
                raise SamplerError(f"conditional {p0:.6g} outside [0, 1]")
            o = 0 if uniforms[k] < p0 else 1
            c = p0 if o == 0 else 1 - p0
            outs.append(o)
            conds.append(c)
            logp += math.log(max(c, 1e-300))
        outcomes = {e: o for e, o in zip(self.plan.order, outs)}
        return SampleTrace(seed, outcomes, conds, logp)


def stream_uniforms(seed: int, n_samples: int, n_edges: int, first: int = 0) -> np.ndarray:
    """Uniforms for samples first..first+n_samples-1, one counter block per sample."""
    out = np.empty((n_samples, n_edges))
    for i in range(n_samples):
        bitgen = np.random.Philox(key=seed, counter=[0, 0, first + i, 0])
        out[i] = np.random.Generator(bitgen).random(n_edges)
    return out


def partial_probability(
    state: CodeState, g: EmbeddedGraph, scheme: EncodingScheme, plan: MeasurementPlan, outcomes: Sequence[int]
) -> float:
    return Sampler(state, g, scheme, plan).probability(outcomes)


def sample_records(sampler: Sampler, seed: int, n: int) -> list[SampleTrace]:
    u = stream_uniforms(seed, n, sampler.graph.n_edges)
    return [sampler.sample(seed, u[i]) for i in range(n)]
