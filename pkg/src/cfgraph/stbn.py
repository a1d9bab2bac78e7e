"""Spatio-temporal Bayesian networks built from a lag-edge template.

A template edge ``(u, lag, v)`` stands for ``u@(t - lag) -> v@t`` at every
timestamp ``t``. Composite nodes are labelled ``"name@t"`` with ``t`` counted
from 0 at the earliest unrolled slice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CausalError, CycleError, TemporalError
from .graph import Dag
from .identify import QuerySpec, evaluate_expression, fci
from .scm import CptModel, label_index


@dataclass(frozen=True)
class StbnTemplate:
    variables: tuple[str, ...]
    max_lag: int
    lagged_edges: tuple[tuple[str, int, str], ...]

    def instantaneous(self) -> list[tuple[str, str]]:
        return [(u, v) for u, lag, v in self.lagged_edges if lag == 0]


@dataclass(frozen=True)
class UnrolledStbn:
    dag: Dag
    horizon: int
    template: StbnTemplate

    def node(self, var: str, t: int) -> str:
        label = node_label(var, t)
        self.dag._check(label)
        return label


def node_label(var: str, t: int) -> str:
    return f"{var}@{t}"


def parse_label(label: str) -> tuple[str, int]:
    var, sep, t = label.rpartition("@")
    if not sep or not var:
        raise CausalError(f"not a composite node label: {label!r}")
    return var, int(t)


def validate_temporal(variables: Sequence[str], max_lag: int,
                      lagged_edges: Iterable[Sequence]) -> StbnTemplate:
    """Check the temporal ordering rules and return a frozen template.

    Every lag must be non-negative (no effect precedes its cause) and at most
    ``max_lag``; the lag-0 edges must be acyclic among the variables.
    """
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise CausalError("template variables repeat a name")
    for v in variables:
        if not isinstance(v, str) or not v or "@" in v:
            raise CausalError(f"invalid template variable name {v!r}")
    if int(max_lag) != max_lag or max_lag < 0:
        raise TemporalError(f"max_lag must be a non-negative integer, got {max_lag!r}")
    max_lag = int(max_lag)
    known = set(variables)
    edges = []
    for e in lagged_edges:
        u, lag, v = e
        for end in (u, v):
            if end not in known:
                raise CausalError(f"template edge uses unknown variable {end!r}")
        if int(lag) != lag:
            raise TemporalError(f"lag must be an integer, got {lag!r}")
        lag = int(lag)
        if lag < 0:
            raise TemporalError(
                f"edge {u}@t{lag:+d} -> {v}@t points backward in time (negative lag)"
            )
        if lag > max_lag:
            raise TemporalError(f"edge {u} -{lag}-> {v} exceeds max_lag {max_lag}")
        edges.append((u, lag, v))
    if len(set(edges)) != len(edges):
        raise CausalError("template repeats an edge")
    same_time = [(u, v) for u, lag, v in edges if lag == 0]
    for u, v in same_time:
        if u == v:
            raise TemporalError(f"instantaneous self-loop on {u!r}")
    try:
        Dag(variables, same_time)
    except CycleError as exc:
        raise TemporalError(f"instantaneous edges form a cycle: {' -> '.join(exc.cycle)}") from exc
    order = {v: k for k, v in enumerate(variables)}
    edges.sort(key=lambda e: (e[1], order[e[0]], order[e[2]]))
    return StbnTemplate(variables, max_lag, tuple(edges))


def unroll(tmpl: StbnTemplate, horizon: int) -> UnrolledStbn:
    """Expand the template over timestamps ``0 .. horizon - 1``."""
    if horizon < tmpl.max_lag + 1:
        raise TemporalError(f"horizon {horizon} is shorter than max_lag + 1 = {tmpl.max_lag + 1}")
    nodes = [node_label(v, t) for t in range(horizon) for v in tmpl.variables]
    edges = []
    for t in range(horizon):
        for u, lag, v in tmpl.lagged_edges:
            if t - lag >= 0:
                edges.append((node_label(u, t - lag), node_label(v, t)))
    return UnrolledStbn(Dag(nodes, edges), horizon, tmpl)


def _horizon_of(m: CptModel) -> int:
    return 1 + max(parse_label(v)[1] for v in m.nodes)


def _composite(target) -> str:
    if isinstance(target, str):
        return target
    var, t = target
    return node_label(var, t)


def stbn_query(tmpl: StbnTemplate, cpts: CptModel, target, do_schedule: Mapping,
               notes: list | None = None) -> dict:
    """Distribution of ``target`` under a schedule of momentary interventions.

    ``target`` and the schedule keys are ``(variable, time)`` pairs or
    composite labels. Because unrolled edges never point backward in time,
    interventions at different timestamps compose in time order.
    """
    unrolled = unroll(tmpl, _horizon_of(cpts))
    if cpts.graph != unrolled.dag:
        raise CausalError("CPT model graph does not match the unrolled template")
    y = _composite(target)
    do = {_composite(k): v for k, v in do_schedule.items()}
    unrolled.dag._check(y, *do)
    if not do:
        from .oracle import enumerate_joint

        dist = enumerate_joint(cpts).marginal([y])
        return {lab: float(p) for lab, p in zip(cpts.domain[y], dist)}
    e = fci(unrolled.dag, QuerySpec(y, tuple(do)), notes)
    return evaluate_expression(e, cpts, do)


def factorized_probability(unrolled: UnrolledStbn, m: CptModel, assignment: Mapping) -> float:
    """Joint probability as a product over time slices of P(node | parents)."""
    g = unrolled.dag
    factors = []
    for t in range(unrolled.horizon):
        for var in unrolled.template.variables:
            v = node_label(var, t)
            idx = tuple(label_index(m.domain[p], assignment[p], p) for p in g.parents(v))
            idx += (label_index(m.domain[v], assignment[v], v),)
            factors.append(float(m.cpt[v][idx]))
    return math.prod(factors)


def factorized_joint(unrolled: UnrolledStbn, m: CptModel) -> dict[tuple, float]:
    """Product-form probability of every full assignment, keyed by label tuples in node order."""
    nodes = m.nodes
    out = {}
    for combo in itertools.product(*(m.domain[v] for v in nodes)):
        out[combo] = factorized_probability(unrolled, m, dict(zip(nodes, combo)))
    return out


def from_dynamics(adjacency, names: Sequence[str] | None = None) -> StbnTemplate:
    """First-order template for ``x_i(t+1) = F(x_i(t)) + sum_j A_ij G(x_i(t), x_j(t))``.

    Each unit keeps a lag-1 self edge carrying the joint effect of ``F`` and
    ``G``; ``A_ij > 0`` adds the lag-1 edge ``j -> i``.
    """
    a = np.asarray(adjacency, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise CausalError(f"adjacency must be square, got shape {a.shape}")
    if np.any(a < 0):
        raise CausalError("adjacency entries must be non-negative")
    if np.any(np.diag(a) != 0):
        raise CausalError("adjacency diagonal must be zero")
    n = a.shape[0]
    names = tuple(names) if names is not None else tuple(f"X{i + 1}" for i in range(n))
    if len(names) != n:
        raise CausalError("need one name per adjacency row")
    edges = [(names[i], 1, names[i]) for i in range(n)]
    edges += [(names[j], 1, names[i]) for i in range(n) for j in range(n) if i != j and a[i, j] > 0]
    return validate_temporal(names, 1, edges)


def to_adjacency(tmpl: StbnTemplate) -> np.ndarray:
    """Inverse of :func:`from_dynamics` for first-order templates."""
    if tmpl.max_lag != 1 or tmpl.instantaneous():
        raise CausalError("only first-order templates without instantaneous edges map to an adjacency")
    pos = {v: k for k, v in enumerate(tmpl.variables)}
    a = np.zeros((len(pos), len(pos)))
    for u, lag, v in tmpl.lagged_edges:
        if u != v:
            a[pos[v], pos[u]] = 1.0
    return a


def difference_series(series: Sequence) -> list:
    """First differences ``series[s + 1] - series[s]``; removes additive drift."""
    arr = np.asarray(series, dtype=float)
    if arr.shape[0] < 2:
        raise CausalError("need at least two observations to difference")
    return np.diff(arr, axis=0).tolist()


def augment_time_confounder(tmpl: StbnTemplate, affected: Iterable[str], name: str = "C") -> StbnTemplate:
    """Add an observed time-indexed confounder ``name``.

    It carries a lag-1 self chain and acts instantaneously on each affected
    variable.
    """
    affected = list(affected)
    if name in tmpl.variables:
        raise CausalError(f"variable {name!r} already exists")
    for v in affected:
        if v not in tmpl.variables:
            raise CausalError(f"unknown affected variable {v!r}")
    edges = list(tmpl.lagged_edges) + [(name, 1, name)] + [(name, 0, v) for v in affected]
    return validate_temporal(tmpl.variables + (name,), max(tmpl.max_lag, 1), edges)
