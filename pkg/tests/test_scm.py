import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfgraph.errors import ModelError, UnknownNodeError, UnsupportedQueryError
from cfgraph.fixtures import confounded_treatment_model, ladder_model
from cfgraph.graph import Dag
from cfgraph.oracle import enumerate_joint, random_cpt_model
from cfgraph.scm import (CptModel, LinearScm, abduct, counterfactual, evaluate, fit_linear, intervene,
                         predict, simulate)

OBS = {"X1": 0.5, "X2": 1.0, "X3": 1.5}


def noise(u1, u2, u3):
    return {"U_X1": u1, "U_X2": u2, "U_X3": u3}


@pytest.mark.parametrize("u, x", [
    ((0.5, 0.75, 0.75), (0.5, 1.0, 1.5)),
    ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
    ((1.0, 0.0, 0.0), (1.0, 0.5, 0.9)),
])
def test_evaluate_examples(u, x):
    out = evaluate(ladder_model(), noise(*u))
    assert [out[v] for v in ("X1", "X2", "X3")] == pytest.approx(x, abs=1e-15)


def test_evaluate_missing_noise():
    with pytest.raises(ModelError):
        evaluate(ladder_model(), {"U_X1": 0.0})


def test_abduct_observation():
    u = abduct(ladder_model(), OBS)
    assert u == pytest.approx(noise(0.5, 0.75, 0.75), abs=1e-15)
    assert abduct(ladder_model(), dict.fromkeys(OBS, 0.0)) == noise(0.0, 0.0, 0.0)
    with pytest.raises(ModelError):
        abduct(ladder_model(), {"X1": 1.0})


@settings(max_examples=100)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_abduct_evaluate_inverse(xs):
    m = ladder_model()
    x = dict(zip(("X1", "X2", "X3"), xs))
    back = evaluate(m, abduct(m, x))
    for v in x:
        assert math.isclose(back[v], x[v], rel_tol=1e-12, abs_tol=1e-9)


def test_intervene_surgery():
    m = ladder_model()
    cut = intervene(m, {"X2": 2.0})
    assert cut.graph.edges == {("X1", "X3"), ("X2", "X3")}
    assert cut.fixed == {"X2": 2.0}
    root = intervene(m, {"X1": 3.0})
    assert root.graph.edges == m.graph.edges
    everything = intervene(m, {"X1": 0.0, "X2": 0.0, "X3": 0.0})
    assert everything.graph.edges == frozenset()
    with pytest.raises(UnknownNodeError):
        intervene(m, {"Q": 1.0})


def test_counterfactual_examples():
    m = ladder_model()
    assert counterfactual(m, OBS, {"X2": 2.0})["X3"] == pytest.approx(1.9, abs=1e-12)
    assert counterfactual(m, OBS, {"X2": 1.0}) == OBS
    late = counterfactual(m, OBS, {"X3": 7.0})
    assert (late["X1"], late["X2"], late["X3"]) == (0.5, 1.0, 7.0)


def test_discrete_counterfactual_rejected():
    with pytest.raises(UnsupportedQueryError):
        counterfactual(confounded_treatment_model(), {"X": 0, "T": 0, "Y": 0}, {"T": 1})


def test_modularity_keeps_other_mechanisms():
    m = ladder_model()
    cut = intervene(m, {"X2": 2.0})
    for v in ("X1", "X3"):
        assert cut.mechanism(v) == m.mechanism(v)
    d = confounded_treatment_model()
    dcut = intervene(d, {"T": 1})
    assert all(np.array_equal(dcut.cpt[v], d.cpt[v]) for v in ("X", "Y"))
    assert dcut.cpt["T"].tolist() == [0.0, 1.0]
    assert dcut.graph.parents("T") == ()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_intervene_keeps_cpt_rows_normalised(seed):
    rng = np.random.default_rng(seed)
    m = random_cpt_model(rng, 5, domain_size=3)
    v = m.nodes[int(rng.integers(5))]
    cut = intervene(m, {v: int(rng.integers(3))})
    for w in cut.nodes:
        assert np.allclose(cut.cpt[w].sum(axis=-1), 1.0, atol=1e-12)


def test_out_of_domain_intervention():
    with pytest.raises(ModelError):
        intervene(confounded_treatment_model(), {"T": 5})


@pytest.mark.parametrize("bad, msg", [
    ({"A": [0.5, 0.4]}, "sums to 0.9"),
    ({"A": [0.5, 0.5, 0.0]}, "shape"),
    ({"A": [-0.5, 1.5]}, "negative"),
])
def test_cpt_validation(bad, msg):
    g = Dag(["A"], [])
    with pytest.raises(ModelError, match=msg):
        CptModel(g, {"A": (0, 1)}, bad)


def test_cpt_row_error_names_node_and_row():
    g = Dag(["A", "B"], [("A", "B")])
    with pytest.raises(ModelError, match=r"'B'.*\{'A': 1\}"):
        CptModel(g, {"A": (0, 1), "B": (0, 1)}, {"A": [0.5, 0.5], "B": [[0.5, 0.5], [0.7, 0.2]]})


def test_linear_coefficient_checks():
    g = Dag(["A", "B"], [("A", "B")])
    with pytest.raises(ModelError):
        LinearScm(g, {})
    with pytest.raises(ModelError):
        LinearScm(g, {("A", "B"): 1.0, ("B", "A"): 1.0})


def test_simulate_cpt_marginals_within_five_se():
    m = confounded_treatment_model()
    rows = simulate(m, 1000, seed=11)
    joint = enumerate_joint(m)
    for v in m.nodes:
        p = joint.marginal([v])[1]
        phat = sum(r[v] == 1 for r in rows) / 1000
        assert abs(phat - p) <= 5 * math.sqrt(p * (1 - p) / 1000)


def test_simulate_zero_noise_and_determinism():
    m = ladder_model()
    rows = simulate(m, 5, seed=1, noise_std={"X1": 0.0, "X2": 0.0, "X3": 0.0})
    assert all(r == predict(m) for r in rows)
    assert simulate(m, 20, seed=9) == simulate(m, 20, seed=9)
    assert simulate(m, 20, seed=9) != simulate(m, 20, seed=10)
    with pytest.raises(ModelError):
        simulate(m, 0, seed=1)
    with pytest.raises(ModelError):
        simulate(m, 3, seed=1, noise_std={"X1": -1.0})


def test_fit_linear_ols_and_lad_on_extrapolation_points():
    g = Dag(["T", "Y"], [("T", "Y")])
    data = [{"T": t, "Y": y} for t, y in [(0, 0.5), (1, 1), (2, 2.5), (3, 2)]]
    ols = fit_linear(data, g)
    assert ols.coeff[("T", "Y")] == pytest.approx(0.6, abs=1e-12)
    assert ols.intercept["Y"] == pytest.approx(0.6, abs=1e-12)
    lad = fit_linear(data, g, method="lad")
    assert lad.coeff[("T", "Y")] == pytest.approx(0.5, abs=1e-9)
    assert predict(lad, {"T": 4.0})["Y"] == pytest.approx(2.5, abs=1e-9)


def test_fit_linear_exact_and_constant():
    g = Dag(["T", "Y"], [("T", "Y")])
    exact = fit_linear([{"T": t, "Y": 3 * t - 1} for t in range(5)], g)
    assert exact.coeff[("T", "Y")] == pytest.approx(3.0, abs=1e-12)
    assert exact.noise_std["Y"] == pytest.approx(0.0, abs=1e-12)
    const = fit_linear([{"T": t, "Y": 4.0} for t in range(5)], g)
    assert const.coeff[("T", "Y")] == pytest.approx(0.0, abs=1e-12)
    assert const.intercept["Y"] == pytest.approx(4.0, abs=1e-12)


def test_fit_linear_rank_deficient_names_node():
    g = Dag(["T", "Y"], [("T", "Y")])
    with pytest.raises(ModelError, match="'Y'"):
        fit_linear([{"T": 1.0, "Y": float(k)} for k in range(4)], g)


def test_fit_recovers_coefficients_from_vanishing_noise():
    m = ladder_model()
    # X2 keeps its own noise, otherwise it would be collinear with X1
    rows = simulate(m, 200, seed=5, noise_std={"X1": 1.0, "X2": 1.0, "X3": 1e-13})
    fit = fit_linear(rows, m.graph)
    for e, c in m.coeff.items():
        if e[1] == "X3":
            assert fit.coeff[e] == pytest.approx(c, abs=1e-9)
