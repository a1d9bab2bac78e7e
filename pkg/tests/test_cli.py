import json
import subprocess
import sys

import numpy as np
import pytest

from cfgraph.cli import format_result, main, run_query
from cfgraph.errors import CausalError
from cfgraph.fixtures import collider_graph, confounded_treatment_graph, confounded_treatment_model, ladder_model
from cfgraph.io import serialize_model
from cfgraph.oracle import random_cpts
from cfgraph.stbn import unroll, validate_temporal


@pytest.fixture
def model_file(tmp_path):
    def write(model, name="model.json"):
        p = tmp_path / name
        p.write_text(serialize_model(model), encoding="utf-8")
        return str(p)
    return write


def test_counterfactual_query():
    out = run_query(ladder_model(), "counterfactual --observe X1=0.5,X2=1,X3=1.5 --do X2=2 --target X3")
    assert out == {"X3": 1.9}


def test_identify_query():
    out = run_query(confounded_treatment_graph(), "identify --do T --target Y")
    assert out["expression"] == "Σ_{x} P(Y|T,X=x) P(X=x)"
    assert out["tree"]["kind"] == "sum"


def test_dsep_query_with_empty_given():
    assert run_query(collider_graph(), 'dsep --x A --y B --given ""') == {"d_separated": True}
    assert run_query(collider_graph(), "dsep --x A --y B --given C") == {"d_separated": False}


def test_backdoor_query():
    g = confounded_treatment_graph()
    out = run_query(g, "backdoor --treatment T --outcome Y")
    assert out == {"adjustment_set": ["X"], "backdoor_paths": ["T<-X->Y"]}
    assert run_query(g, "backdoor --treatment T --outcome Y --adjust X")["satisfied"] is True


def test_do_query_on_cpt_and_linear():
    out = run_query(confounded_treatment_model(), "do --do T=1 --target Y")
    assert out["distribution"] == {"0": 0.38, "1": 0.62}
    assert run_query(ladder_model(), "do --do X1=1 --target X3") == {"X3": 0.9}


def test_twelve_significant_digits():
    out = run_query(ladder_model(), "counterfactual --observe X1=0.1,X2=0.2,X3=0.3 --do X1=0.3")
    assert out["X3"] == float(f"{out['X3']:.12g}")


def test_kind_mismatch_is_user_error():
    with pytest.raises(CausalError):
        run_query(ladder_model(), "ate")
    with pytest.raises(CausalError):
        run_query(ladder_model(), "unroll --horizon 3")
    with pytest.raises(CausalError):
        run_query(ladder_model(), "nonsense")


def test_simulate_is_seeded():
    a = run_query(ladder_model(), "simulate --n 3 --seed 4")
    b = run_query(ladder_model(), "simulate --n 3 --seed 4")
    assert a == b and len(a["rows"]) == 3


def test_unroll_and_stbn_query(model_file):
    t = validate_temporal(["X", "Y"], 1, [("X", 1, "X"), ("X", 1, "Y")])
    out = run_query(t, "unroll --horizon 2")
    assert out["edges"] == [["X@0", "X@1"], ["X@0", "Y@1"]]
    cpts = random_cpts(np.random.default_rng(0), unroll(t, 3).dag)
    path = model_file(cpts, "cpts.json")
    res = run_query(t, f"stbn-query --cpts {path} --target Y@2 --do X@1=1")
    assert sum(res["distribution"].values()) == pytest.approx(1.0, abs=1e-11)


def test_match_and_ate(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("unit,treatment,outcome,x_1\na,1,3,0\nb,0,1,0\nc,1,5,1\nd,0,4,1\n", encoding="utf-8")
    assert main(["--model", str(p), "ate"]) == 0
    from cfgraph.io import read_pom_csv
    t = read_pom_csv(p.read_text())
    out = run_query(t, "ate")
    assert out["ate"] == pytest.approx(1.5)
    m = run_query(t, "match --method exact")
    assert [u["imputed"] for u in m["units"]] == [1.0, 3.0, 4.0, 5.0]


def test_mediate_from_data(tmp_path):
    rng = np.random.default_rng(0)
    t = rng.standard_normal(200)
    m = 0.5 * t + rng.standard_normal(200)
    y = 0.7 * t + 0.4 * m + rng.standard_normal(200)
    p = tmp_path / "d.csv"
    p.write_text("t,m,y\n" + "\n".join(f"{a},{b},{c}" for a, b, c in zip(t, m, y)), encoding="utf-8")
    out = run_query(ladder_model(), f"mediate --treatment t --mediator m --outcome y --data {p}")
    assert out["fit"]["b_total"] == pytest.approx(out["fit"]["b"] + out["indirect"], abs=1e-9)


def test_table_output():
    text = format_result({"a": {"b": 1.5}, "c": [1, 2]}, "table")
    assert text.splitlines() == ["a.b\t1.5", "c\t[1, 2]"]


def test_exit_codes(model_file, capsys):
    path = model_file(ladder_model())
    assert main(["--model", path, "validate"]) == 0
    assert main(["--model", path, "dsep", "--x", "X1", "--y", "Q"]) == 1
    assert main(["--model", path + ".missing", "validate"]) == 1
    assert main(["validate"]) == 1
    assert main(["--model", path, "validate", "--bogus"]) == 1
    err = capsys.readouterr().err
    assert "unknown node 'Q'" in err


def test_internal_failure_exits_two(model_file, monkeypatch):
    from cfgraph import cli
    from cfgraph.errors import InternalInvariantError

    def boom(model, args):
        raise InternalInvariantError("broken")

    monkeypatch.setattr(cli, "cmd_validate", boom)
    assert main(["--model", model_file(ladder_model()), "validate"]) == 2


def test_cli_is_byte_identical_across_runs(model_file):
    path = model_file(ladder_model())
    cmd = [sys.executable, "-m", "cfgraph.cli", "--model", path, "--seed", "7", "simulate", "--n", "5"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["rows"]
