import json

import numpy as np
import pytest
from click.testing import CliRunner

from genus_sim.cli import main
from genus_sim.code_states import CodeState, ProductState
from genus_sim.embedded_graph import PuncturedCylinderSpec, punctured_cylinder, read_graph_file
from genus_sim.sampler import MeasurementPlan


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def files(tmp_path, runner):
    graph = tmp_path / "g.txt"
    res = runner.invoke(main, ["gen", "--N", "3", "--M", "3", "--slot", "1,0,1", "-o", str(graph)])
    assert res.exit_code == 0, res.output
    _, layout = punctured_cylinder(PuncturedCylinderSpec.parse("N=3 M=3 slot=1,0,1"))
    n = len(layout.kind)
    rng = np.random.default_rng(0)
    state = tmp_path / "s.txt"
    state.write_text(CodeState("C", 1, {0: 1.0}).format())
    prod = tmp_path / "p.txt"
    prod.write_text(ProductState.random(n, rng).format())
    plan = tmp_path / "plan.txt"
    plan.write_text(MeasurementPlan.random_fixed(layout.ltor_order(), rng).format())
    return {"graph": str(graph), "state": str(state), "product": str(prod), "plan": str(plan), "n": n}


def test_gen_header_and_round_trip(runner):
    res = runner.invoke(main, ["gen", "--N", "4", "--M", "9", "--slot", "1,0,2", "--slot", "4,2,1", "--slot", "6,1,2"])
    assert res.exit_code == 0
    assert "genus 3" in res.output.splitlines()[0]
    g, cocycles, cyl = read_graph_file(res.output)
    assert g.genus == 3 and len(cocycles) == 6 and cyl[0].slots == ((1, 0, 2), (4, 2, 1), (6, 1, 2))


def test_gen_without_slots(runner):
    res = runner.invoke(main, ["gen", "--N", "2", "--M", "2"])
    assert res.exit_code == 0
    g, cocycles, _ = read_graph_file(res.output)
    assert g.genus == 0 and cocycles == []


def test_gen_rejects_bad_slot(runner):
    res = runner.invoke(main, ["gen", "--N", "3", "--M", "3", "--slot", "1,0,9"])
    assert res.exit_code == 1


def test_overlap_uses_one_term_for_special_state(runner, files):
    res = runner.invoke(main, ["overlap", "--graph", files["graph"], "--state", files["state"], "--product", files["product"]])
    assert res.exit_code == 0, res.output
    lines = res.output.splitlines()
    assert lines[0].startswith("overlap ")
    rec = json.loads(lines[1].split(" ", 1)[1])
    assert rec["terms"] == 1 and rec["strategy"] == "sparse"
    full = runner.invoke(main, ["overlap", "--graph", files["graph"], "--state", files["state"], "--product", files["product"], "--strategy", "x4g", "--json"])
    val = json.loads(full.output)
    re, im = map(float, lines[0].split()[1:])
    assert complex(re, im) == pytest.approx(complex(val["re"], val["im"]), abs=1e-12)


def test_prob_modes(runner, files):
    base = ["prob", "--graph", files["graph"], "--state", files["state"]]
    res = runner.invoke(main, base + ["--product", files["product"]])
    assert res.exit_code == 0 and res.output.startswith("prob ")
    pre = runner.invoke(main, base + ["--plan", files["plan"], "--outcomes", ""])
    assert float(pre.output.split()[1]) == pytest.approx(1)
    res = runner.invoke(main, base + ["--plan", files["plan"], "--outcomes", "0110"])
    assert res.exit_code == 0 and 0 <= float(res.output.split()[1]) <= 1
    assert runner.invoke(main, base).exit_code == 1
    assert runner.invoke(main, base + ["--plan", files["plan"], "--outcomes", "012"]).exit_code == 1


def test_sample_is_deterministic(runner, files, tmp_path):
    args = ["sample", "--graph", files["graph"], "--plan", files["plan"], "--samples", "4", "--seed", "9"]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args + ["--threads", "2"])
    assert a.exit_code == 0 and a.output == b.output
    lines = a.output.splitlines()
    assert len(lines) == 4 and all(l.split()[1] == "9" and len(l.split()[2]) == files["n"] for l in lines)
    c = runner.invoke(main, args[:-1] + ["10"])
    assert c.output != a.output


def test_missing_file_is_input_error(runner, files):
    res = runner.invoke(main, ["overlap", "--graph", "nope.txt", "--state", files["state"], "--product", files["product"]])
    assert res.exit_code != 0


def test_malformed_state_is_input_error(runner, files, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("basis Q\ngenus 1\n")
    res = runner.invoke(main, ["overlap", "--graph", files["graph"], "--state", str(bad), "--product", files["product"]])
    assert res.exit_code == 1


def test_verify_and_size_cap(runner):
    res = runner.invoke(main, ["verify", "--max-edges", "12", "--trials", "10", "--suite", "cycle-sum", "--suite", "stabilizers"])
    assert res.exit_code == 0, res.output
    assert all("PASS" in l for l in res.output.splitlines())
    assert runner.invoke(main, ["verify", "--max-edges", "30"]).exit_code == 3


def test_bench_json(runner):
    res = runner.invoke(main, ["bench", "--N", "2", "--M", "4,6", "--repeat", "1", "--json"])
    assert res.exit_code == 0
    recs = [json.loads(l) for l in res.output.splitlines()]
    assert [r["M"] for r in recs] == [4, 6] and all(r["genus"] == 1 and r["terms"] == 4 for r in recs)
