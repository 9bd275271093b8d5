"""Oracle-equivalence suites behind ``genus-sim verify``.

Each suite draws its own random instances from a seed and compares a fast
path against the dense reference, reporting the worst error seen.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .code_states import ProductState, random_state
from .embedded_graph import EmbeddedGraph, PuncturedCylinderSpec, punctured_cylinder, random_embedded_graph
from .homology import canonical_encoding_scheme, tree_cotree_scheme
from .matching_engine import CycleEngine, cycle_generating_function
from .oracle import (
    MAX_EDGES,
    SizeCapError,
    apply_x,
    apply_z,
    cycle_space,
    dense_code_state,
    dense_overlap,
    dense_partial_probability,
    dense_plus,
)
from .overlap import overlap
from .sampler import MeasurementPlan, Sampler


@dataclass
class SuiteResult:
    name: str
    passed: bool
    cases: int
    max_error: float
    tolerance: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{self.name:<12} {flag} cases={self.cases} max_err={self.max_error:.3e} tol={self.tolerance:.0e}"


def brute_cycle_sum(g: EmbeddedGraph, w) -> complex:
    """sum over the cycle space of prod_{e in x} w_e, by enumeration."""
    cycles = cycle_space(g)
    prod = np.ones(cycles.size, dtype=complex)
    for e in range(g.n_edges):
        prod = np.where((cycles >> e) & 1, prod * w[e], prod)
    return complex(prod.sum())


def random_graph(rng: np.random.Generator, max_edges: int, genus: int) -> EmbeddedGraph:
    ne = int(rng.integers(max(4 * genus + 4, 8), max_edges + 1))
    nv = int(rng.integers(3, ne - 4 * genus + 2))
    return random_embedded_graph(nv, ne, genus, rng)


def suite_cycle_sum(rng, max_edges: int, trials: int) -> SuiteResult:
    worst = 0.0
    cases = 0
    n_graphs = max(2, trials // 10)
    for i in range(n_graphs):
        g = random_graph(rng, max_edges, 1 + i % 2)
        scheme = canonical_encoding_scheme(g)
        engine = CycleEngine(g, scheme)
        for _ in range(max(1, trials // n_graphs)):
            w = rng.normal(size=g.n_edges) + 1j * rng.normal(size=g.n_edges)
            ref = brute_cycle_sum(g, w)
            got = cycle_generating_function(g, scheme, w, engine)
            worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
            cases += 1
    return SuiteResult("cycle-sum", worst <= 1e-9, cases, worst, 1e-9)


def suite_overlap(rng, max_edges: int, trials: int) -> SuiteResult:
    worst = 0.0
    cases = 0
    n_graphs = max(2, trials // 10)
    for i in range(n_graphs):
        g = random_graph(rng, max_edges, 1 + i % 2)
        for scheme in (canonical_encoding_scheme(g), tree_cotree_scheme(g)):
            engine = CycleEngine(g, scheme)
            strategies = ("x4g", "c2g", "sparse") if scheme.canonical else ("x4g",)
            for _ in range(max(1, trials // (2 * n_graphs))):
                basis = "C" if scheme.canonical and rng.random() < 0.5 else "X"
                st = random_state(g.genus, rng, basis, scheme=scheme if basis == "C" else None)
                phi = ProductState.random(g.n_edges, rng)
                ref = dense_overlap(dense_code_state(st, g, scheme), phi)
                for s in strategies:
                    got = overlap(st, phi, g, scheme, s, engine).value
                    worst = max(worst, abs(got - ref))
                cases += 1
    return SuiteResult("overlap", worst <= 1e-9, cases, worst, 1e-9)


def suite_stabilizers(rng, max_edges: int, trials: int) -> SuiteResult:
    worst = 0.0
    cases = 0
    for i in range(max(2, trials // 20)):
        g = random_graph(rng, min(max_edges, 18), 1 + i % 2)
        scheme = canonical_encoding_scheme(g)
        plus = dense_plus(g)
        ops = [apply_z(plus, g.star(v)) for v in range(g.n_vertices)]
        ops += [apply_x(plus, g.face_boundary(f)) for f in range(g.n_faces)]
        ops += [apply_x(plus, c) for c in scheme.cycles]
        for out in ops:
            worst = max(worst, float(np.max(np.abs(out.amps - plus.amps))))
            cases += 1
    return SuiteResult("stabilizers", worst <= 1e-12, cases, worst, 1e-12)


def suite_sampler(rng, max_edges: int, trials: int) -> SuiteResult:
    specs = ["N=3 M=2 slot=0,1,1", "N=2 M=3 slot=1,0,1", "N=3 M=3 slot=1,0,1", "N=2 M=5 slot=1,0,1 slot=3,1,1"]
    worst = 0.0
    cases = 0
    for text in specs:
        spec = PuncturedCylinderSpec.parse(text)
        g, layout = punctured_cylinder(spec)
        if g.n_edges > max_edges:
            continue
        scheme = canonical_encoding_scheme(g, layout=layout, slots=spec.slots)
        for _ in range(max(1, trials // 50)):
            st = random_state(g.genus, rng, "X")
            plan = MeasurementPlan.random_fixed(layout.ltor_order(), rng)
            sampler = Sampler(st, g, scheme, plan, layout=layout, slots=spec.slots)
            dense = dense_code_state(st, g, scheme)
            for k in range(g.n_edges + 1):
                outs = [int(o) for o in rng.integers(0, 2, size=k)]
                edges = plan.order[:k]
                states = [plan.bases[e][o] for e, o in zip(edges, outs)]
                ref = dense_partial_probability(dense, edges, states)
                worst = max(worst, abs(sampler.probability(outs) - ref))
                cases += 1
    return SuiteResult("sampler", cases > 0 and worst <= 1e-8, cases, worst, 1e-8)


SUITES: dict[str, Callable] = {
    "cycle-sum": suite_cycle_sum,
    "overlap": suite_overlap,
    "stabilizers": suite_stabilizers,
    "sampler": suite_sampler,
}


def run_suites(max_edges: int, trials: int, seed: int, names=None) -> list[SuiteResult]:
    if max_edges > MAX_EDGES:
        raise SizeCapError(f"--max-edges {max_edges} exceeds the dense cap of {MAX_EDGES}")
    out = []
    for i, name in enumerate(names or SUITES):
        rng = np.random.default_rng([seed, i])
        out.append(SUITES[name](rng, max_edges, trials))
    return out

