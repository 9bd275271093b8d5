"""genus-sim command line.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 size cap.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .code_states import CodeState, ProductState, special_state
from .embedded_graph import PuncturedCylinderSpec, format_graph, punctured_cylinder, read_graph_file
from .homology import canonical_encoding_scheme, scheme_from_cocycles
from .matching_engine import CycleEngine, EngineError
from .oracle import SizeCapError
from .overlap import STRATEGIES, OutcomeRecord, overlap, output_probability
from .pfaffian import PfaffianError
from .sampler import MeasurementPlan, Sampler, SamplerError, stream_uniforms
from .verify import SUITES, run_suites

DEFAULT_SEED = 7


class Exit:
    OK = 0
    INPUT = 1
    NUMERIC = 2
    SIZE_CAP = 3


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, SizeCapError):
        return Exit.SIZE_CAP
    if isinstance(exc, (PfaffianError, EngineError, SamplerError, ArithmeticError, FloatingPointError)):
        return Exit.NUMERIC
    if isinstance(exc, (ValueError, OSError, KeyError)):
        return Exit.INPUT
    return Exit.NUMERIC


def _emit(payload: dict, text: str, as_json: bool) -> None:
    click.echo(json.dumps(payload, sort_keys=True) if as_json else text)


def _load_graph(path: str):
    """Graph, encoding scheme and optional cylinder annotation from a graph file."""
    g, cocycles, cyl = read_graph_file(Path(path).read_text())
    if cocycles:
        scheme = scheme_from_cocycles(g, cocycles)
    elif cyl is not None:
        spec, layout = cyl
        scheme = canonical_encoding_scheme(g, layout=layout, slots=spec.slots)
    else:
        scheme = canonical_encoding_scheme(g)
    return g, scheme, cyl


def _load_state(path: str, scheme) -> CodeState:
    st = CodeState.parse(Path(path).read_text())
    return st.with_scheme(scheme) if st.basis == "C" else st


threads_option = click.option(
    "--threads", type=int, default=1, envvar="GENUS_SIM_THREADS", show_default=True, help="Worker threads for Pfaffian terms."
)
json_option = click.option("--json", "as_json", is_flag=True, help="Structured output.")


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.exceptions.Exit:
            raise
        except click.ClickException as exc:
            exc.show()
            sys.exit(Exit.INPUT)
        except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc))


@click.group(cls=_Group)
def main() -> None:
    """Exact simulation of surface-code resource states on embedded graphs."""


@main.command()
@click.option("--N", "n", type=int, required=True, help="Rows (vertical period).")
@click.option("--M", "m", type=int, required=True, help="Columns.")
@click.option("--slot", "slots", multiple=True, help="Slot x,y,K (repeatable).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Write here instead of stdout.")
def gen(n: int, m: int, slots: tuple[str, ...], output: str | None) -> None:
    """Write a punctured-cylinder graph file with layout annotations."""
    text = " ".join([f"N={n}", f"M={m}"] + [f"slot={s}" for s in slots])
    spec = PuncturedCylinderSpec.parse(text)
    g, layout = punctured_cylinder(spec)
    scheme = canonical_encoding_scheme(g, layout=layout, slots=spec.slots)
    out = format_graph(g, scheme.cocycles, f"genus {g.genus}", cylinder=(spec, layout))
    if output:
        Path(output).write_text(out)
        click.echo(f"wrote {output} genus {g.genus} edges {g.n_edges}")
    else:
        click.echo(out, nl=False)


@main.command("overlap")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--state", "state_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--product", "product_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(STRATEGIES), default="auto", show_default=True)
@threads_option
@json_option
def overlap_cmd(graph_path, state_path, product_path, strategy, threads, as_json) -> None:
    """<psi|phi> for a code state and a product state."""
    g, scheme, _ = _load_graph(graph_path)
    st = _load_state(state_path, scheme)
    phi = ProductState.parse(Path(product_path).read_text(), g.n_edges)
    res = overlap(st, phi, g, scheme, strategy, threads=threads)
    rec = res.record()
    text = f"overlap {float(res.value.real)!r} {float(res.value.imag)!r}\nrecord {json.dumps(rec, sort_keys=True)}"
    _emit(rec, text, as_json)


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--state", "state_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--product", "product_path", type=click.Path(exists=True, dir_okay=False), help="Projector onto this product state.")
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False), help="Measurement plan.")
@click.option("--outcomes", help="Outcome bits for the first plan edges (prefix allowed).")
@click.option("--corrections", default="", help="Comma-separated O^c edges (full records only).")
@click.option("--strategy", type=click.Choice(STRATEGIES), default="auto", show_default=True)
@threads_option
@json_option
def prob(graph_path, state_path, product_path, plan_path, outcomes, corrections, strategy, threads, as_json) -> None:
    """Outcome probability: |<psi|phi>|^2, a plan prefix, or a full record."""
    g, scheme, cyl = _load_graph(graph_path)
    st = _load_state(state_path, scheme)
    start = time.perf_counter()
    if product_path:
        phi = ProductState.parse(Path(product_path).read_text(), g.n_edges)
        res = overlap(st, phi, g, scheme, strategy, threads=threads)
        p = float(abs(res.value) ** 2)
        kind = "projector"
    elif plan_path and outcomes is not None:
        layout = cyl[1] if cyl else None
        plan = MeasurementPlan.parse(Path(plan_path).read_text(), layout)
        bits = [int(c) for c in outcomes.strip()]
        if any(b not in (0, 1) for b in bits) or len(bits) > g.n_edges:
            raise click.BadParameter("outcomes must be at most |E| bits", param_hint="--outcomes")
        corr = frozenset(int(t) for t in corrections.split(",") if t.strip())
        if corr:
            if len(bits) != g.n_edges:
                raise click.BadParameter("--corrections needs a full record", param_hint="--outcomes")
            by_edge = np.zeros(g.n_edges, dtype=np.int8)
            for e, b in zip(plan.order, bits):
                by_edge[e] = b
            record = OutcomeRecord(by_edge, plan.bases, corr)
            p = output_probability(st, record, g, scheme, strategy)
            kind = "record"
        else:
            sampler = Sampler(st, g, scheme, plan, threads, cyl[1] if cyl else None, cyl[0].slots if cyl else None)
            p = sampler.probability(bits)
            kind = "prefix"
    else:
        raise click.UsageError("give --product, or --plan with --outcomes")
    rec = {"prob": p, "kind": kind, "seconds": time.perf_counter() - start}
    _emit(rec, f"prob {float(p)!r}", as_json)


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--state", "state_path", type=click.Path(exists=True, dir_okay=False), help="Default: |C^{0,0}>.")
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@threads_option
@json_option
def sample(graph_path, state_path, plan_path, samples, seed, output, threads, as_json) -> None:
    """Draw measurement records along the plan (LtoR on punctured cylinders)."""
    g, scheme, cyl = _load_graph(graph_path)
    if cyl is None:
        raise click.UsageError("sampling needs a punctured-cylinder graph file (see 'gen')")
    spec, layout = cyl
    st = _load_state(state_path, scheme) if state_path else special_state(0, 0, g.genus, scheme)
    plan = MeasurementPlan.parse(Path(plan_path).read_text(), layout)
    sampler = Sampler(st, g, scheme, plan, threads, layout, spec.slots)
    lines = []
    chunk = 1024
    for first in range(0, samples, chunk):
        count = min(chunk, samples - first)
        u = stream_uniforms(seed, count, g.n_edges, first)
        for i in range(count):
            tr = sampler.sample(seed, u[i])
            bits = tr.bitstring(g.n_edges)
            if as_json:
                lines.append(json.dumps({"seed": seed, "index": first + i, "bits": bits, "log_prob": tr.log_prob}))
            else:
                lines.append(f"sample {seed} {bits} {float(tr.log_prob)!r}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--max-edges", type=int, default=18, show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--suite", "suites", multiple=True, type=click.Choice(list(SUITES)), help="Run only these suites.")
@json_option
def verify(max_edges, trials, seed, suites, as_json) -> None:
    """Compare every fast path against the dense oracle."""
    results = run_suites(max_edges, trials, seed, suites or None)
    if as_json:
        click.echo(json.dumps([r.__dict__ for r in results], sort_keys=True))
    else:
        for r in results:
            click.echo(r.line())
    if not all(r.passed for r in results):
        sys.exit(Exit.NUMERIC)


@main.command()
@click.option("--N", "n", type=int, default=4, show_default=True)
@click.option("--M", "ms", default="10,20,40", show_default=True, help="Comma-separated column counts.")
@click.option("--genus", type=int, default=1, show_default=True)
@click.option("--strategy", type=click.Choice(STRATEGIES[1:]), default="c2g", show_default=True)
@click.option("--repeat", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@threads_option
@json_option
def bench(n, ms, genus, strategy, repeat, seed, threads, as_json) -> None:
    """Overlap timings over punctured cylinders of growing width."""
    rng = np.random.default_rng(seed)
    for m in (int(t) for t in ms.split(",")):
        slots = " ".join(f"slot={1 + 2 * j},{j % n},1" for j in range(genus))
        spec = PuncturedCylinderSpec.parse(f"N={n} M={m} {slots}")
        g, layout = punctured_cylinder(spec)
        scheme = canonical_encoding_scheme(g, layout=layout, slots=spec.slots)
        st = special_state(0, 0, genus, scheme)
        phi = ProductState.random(g.n_edges, rng)
        best = float("inf")
        terms = 0
        engine = CycleEngine(g, scheme, threads)
        for _ in range(repeat):
            res = overlap(st, phi, g, scheme, strategy, engine)
            best = min(best, res.seconds)
            terms = res.terms
        rec = {"N": n, "M": m, "edges": g.n_edges, "genus": g.genus, "strategy": strategy, "terms": terms, "seconds": best}
        _emit(rec, f"bench edges {g.n_edges} genus {g.genus} strategy {strategy} terms {terms} seconds {best:.6f}", as_json)


if __name__ == "__main__":
    main()
