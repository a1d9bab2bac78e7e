"""Small named models used by the CLI, the tests and the README."""

from __future__ import annotations

import numpy as np

from .graph import Dag
from .scm import CptModel, LinearScm


def ladder_model() -> LinearScm:
    """X1 -> X2 -> X3 with a direct X1 -> X3 edge; slopes 0.5, 0.4 and 0.7."""
    g = Dag(["X1", "X2", "X3"], [("X1", "X2"), ("X1", "X3"), ("X2", "X3")])
    coeff = {("X1", "X2"): 0.5, ("X1", "X3"): 0.7, ("X2", "X3"): 0.4}
    return LinearScm(g, coeff, noise_std={"X1": 1.0, "X2": 1.0, "X3": 1.0})


def confounded_treatment_graph() -> Dag:
    """Covariate X drives both treatment T and outcome Y; T -> Y."""
    return Dag(["X", "T", "Y"], [("X", "T"), ("X", "Y"), ("T", "Y")])


def confounded_treatment_model(p_x: float = 0.4, p_t=(0.3, 0.7),
                               p_y=((0.2, 0.5), (0.4, 0.8))) -> CptModel:
    """Binary model on :func:`confounded_treatment_graph`.

    ``p_t[x]`` is P(T=1 | X=x) and ``p_y[x][t]`` is P(Y=1 | X=x, T=t).
    """
    g = confounded_treatment_graph()
    bern = lambda p: [1.0 - p, p]
    cpt = {
        "X": np.array(bern(p_x)),
        "T": np.array([bern(p) for p in p_t]),
        "Y": np.array([[bern(p) for p in row] for row in p_y]),
    }
    return CptModel(g, {"X": (0, 1), "T": (0, 1), "Y": (0, 1)}, cpt)


def collider_graph() -> Dag:
    return Dag(["A", "B", "C"], [("A", "C"), ("B", "C")])


def chain_graph(n: int, prefix: str = "V") -> Dag:
    names = [f"{prefix}{k}" for k in range(n)]
    return Dag(names, list(zip(names, names[1:])))
