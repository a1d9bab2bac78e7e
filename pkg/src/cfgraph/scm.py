"""Structural causal models: linear additive-noise and discrete CPT families.

Both families are immutable. :func:`intervene` performs graph surgery and
returns a new model whose untouched mechanisms are shared with the input.
Random draws use numpy's PCG64 generator (``numpy.random.default_rng``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import ModelError, UnknownNodeError, UnsupportedQueryError
from .graph import Dag

ROW_TOLERANCE = 1e-9


def _frozen(d) -> Mapping:
    return MappingProxyType(dict(d))


# ---------------------------------------------------------------------------
# Linear family


@dataclass(frozen=True, eq=False)
class LinearScm:
    """``x_i = intercept_i + sum_j coeff[(j, i)] * x_j + u_i``.

    Nodes listed in ``fixed`` are constants set by an intervention; their
    incoming edges are already absent from ``graph``. ``noise_std`` is only
    needed for sampling.
    """

    graph: Dag
    coeff: Mapping[tuple[str, str], float]
    noise_name: Mapping[str, str] = field(default_factory=dict)
    intercept: Mapping[str, float] = field(default_factory=dict)
    noise_std: Mapping[str, float] = field(default_factory=dict)
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        g = self.graph
        coeff = {tuple(k): float(v) for k, v in self.coeff.items()}
        missing = set(g.edges) - set(coeff)
        if missing:
            a, b = sorted(missing)[0]
            raise ModelError(f"edge {a}->{b} has no coefficient")
        extra = set(coeff) - set(g.edges)
        if extra:
            a, b = sorted(extra)[0]
            raise ModelError(f"coefficient given for {a}->{b}, which is not an edge")
        names = {v: self.noise_name.get(v, f"U_{v}") for v in g.nodes}
        if len(set(names.values())) != len(names):
            raise ModelError("noise labels must be distinct")
        for label, mapping in (("intercept", self.intercept), ("noise_std", self.noise_std),
                               ("fixed", self.fixed)):
            for v in mapping:
                if v not in g:
                    raise UnknownNodeError(v)
        for v, s in self.noise_std.items():
            if not (s >= 0 and math.isfinite(s)):
                raise ModelError(f"noise standard deviation for {v!r} must be finite and >= 0")
        for v in self.fixed:
            if g.parents(v):
                raise ModelError(f"fixed node {v!r} still has incoming edges")
        object.__setattr__(self, "coeff", _frozen(coeff))
        object.__setattr__(self, "noise_name", _frozen(names))
        object.__setattr__(self, "intercept", _frozen({v: float(self.intercept.get(v, 0.0)) for v in g.nodes}))
        object.__setattr__(self, "noise_std", _frozen({v: float(s) for v, s in self.noise_std.items()}))
        object.__setattr__(self, "fixed", _frozen({v: float(x) for v, x in self.fixed.items()}))

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.graph.nodes

    def mechanism(self, v: str):
        """Everything that determines ``v`` given its parents and noise."""
        if v in self.fixed:
            return ("fixed", self.fixed[v])
        row = tuple((p, self.coeff[(p, v)]) for p in self.graph.parents(v))
        return ("linear", row, self.intercept[v], self.noise_name[v])

    def __eq__(self, other):
        if not isinstance(other, LinearScm):
            return NotImplemented
        return (self.graph == other.graph and dict(self.coeff) == dict(other.coeff)
                and dict(self.noise_name) == dict(other.noise_name)
                and dict(self.intercept) == dict(other.intercept)
                and dict(self.noise_std) == dict(other.noise_std)
                and dict(self.fixed) == dict(other.fixed))


def evaluate(m: LinearScm, u: Mapping[str, float]) -> dict[str, float]:
    """Push noise values through the structural equations in topological order."""
    x: dict[str, float] = {}
    for v in m.graph.topological_order:
        if v in m.fixed:
            x[v] = m.fixed[v]
            continue
        name = m.noise_name[v]
        if name not in u:
            raise ModelError(f"missing noise value {name!r} for node {v!r}")
        total = m.intercept[v] + float(u[name])
        for p in m.graph.parents(v):
            total += m.coeff[(p, v)] * x[p]
        x[v] = total
    return {v: x[v] for v in m.nodes}


def abduct(m: LinearScm, x: Mapping[str, float]) -> dict[str, float]:
    """Recover the noise values that reproduce the full observation ``x``."""
    for v in m.nodes:
        if v not in x:
            raise ModelError(f"observation is missing node {v!r}")
    u = {}
    for v in m.nodes:
        if v in m.fixed:
            continue
        resid = float(x[v]) - m.intercept[v]
        for p in m.graph.parents(v):
            resid -= m.coeff[(p, v)] * float(x[p])
        u[m.noise_name[v]] = resid
    return u


def predict(m: LinearScm, do: Mapping[str, float] | None = None) -> dict[str, float]:
    """Evaluate at zero noise (the noise mean), optionally under an intervention."""
    if do:
        m = intervene(m, do)
    return evaluate(m, {m.noise_name[v]: 0.0 for v in m.nodes})


# ---------------------------------------------------------------------------
# Discrete family


@dataclass(frozen=True, eq=False)
class CptModel:
    """Finite-domain Bayesian network.

    ``cpt[v]`` has shape ``(*[len(domain[p]) for p in graph.parents(v)], len(domain[v]))``.
    """

    graph: Dag
    domain: Mapping[str, tuple]
    cpt: Mapping[str, np.ndarray]

    def __post_init__(self):
        g = self.graph
        domain = {}
        for v in g.nodes:
            if v not in self.domain:
                raise ModelError(f"node {v!r} has no domain")
            labels = tuple(self.domain[v])
            if not labels:
                raise ModelError(f"domain of {v!r} is empty")
            if len(set(labels)) != len(labels):
                raise ModelError(f"domain of {v!r} repeats a label")
            domain[v] = labels
        for v in self.domain:
            if v not in g:
                raise UnknownNodeError(v)
        tables = {}
        for v in g.nodes:
            if v not in self.cpt:
                raise ModelError(f"node {v!r} has no CPT")
            arr = np.array(self.cpt[v], dtype=float)
            shape = tuple(len(domain[p]) for p in g.parents(v)) + (len(domain[v]),)
            if arr.shape != shape:
                raise ModelError(f"CPT of {v!r} has shape {arr.shape}, expected {shape}")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ModelError(f"CPT of {v!r} has negative or non-finite entries")
            sums = arr.sum(axis=-1)
            off = np.abs(sums - 1.0) > ROW_TOLERANCE
            if np.any(off):
                idx = tuple(int(i) for i in np.argwhere(off)[0]) if off.ndim else ()
                row = {p: domain[p][i] for p, i in zip(g.parents(v), idx)}
                raise ModelError(
                    f"CPT row of {v!r} at parents {row} sums to {float(sums[idx]):.12g}, not 1"
                )
            arr.setflags(write=False)
            tables[v] = arr
        for v in self.cpt:
            if v not in g:
                raise UnknownNodeError(v)
        object.__setattr__(self, "domain", _frozen(domain))
        object.__setattr__(self, "cpt", _frozen(tables))

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.graph.nodes

    def index_of(self, v: str, value) -> int:
        return label_index(self.domain[v], value, v)

    def mechanism(self, v: str):
        return (self.graph.parents(v), self.cpt[v])

    def __eq__(self, other):
        if not isinstance(other, CptModel):
            return NotImplemented
        return (self.graph == other.graph and dict(self.domain) == dict(other.domain)
                and all(np.array_equal(self.cpt[v], other.cpt[v]) for v in self.nodes))


def label_index(labels: Sequence, value, node: str = "?") -> int:
    """Position of ``value`` in ``labels``; falls back to string comparison."""
    for i, lab in enumerate(labels):
        if lab == value:
            return i
    s = str(value)
    for i, lab in enumerate(labels):
        if str(lab) == s:
            return i
    raise ModelError(f"value {value!r} is outside the domain of {node!r}: {list(labels)}")


# ---------------------------------------------------------------------------
# Surgery and the three-step ladder


def intervene(m, do: Mapping):
    """Mutilate ``m``: cut edges into intervened nodes and pin their values."""
    for v in do:
        if v not in m.graph:
            raise UnknownNodeError(v)
    g = m.graph.remove_incoming(do)
    if isinstance(m, LinearScm):
        coeff = {e: c for e, c in m.coeff.items() if e[1] not in do}
        fixed = dict(m.fixed)
        fixed.update({v: float(x) for v, x in do.items()})
        return LinearScm(g, coeff, m.noise_name, m.intercept, m.noise_std, fixed)
    if isinstance(m, CptModel):
        cpt = dict(m.cpt)
        for v, value in do.items():
            point = np.zeros(len(m.domain[v]))
            point[m.index_of(v, value)] = 1.0
            cpt[v] = point
        return CptModel(g, m.domain, cpt)
    raise TypeError(f"cannot intervene on {type(m).__name__}")


def counterfactual(m, observed: Mapping[str, float], do: Mapping[str, float]) -> dict[str, float]:
    """Abduction, action, prediction for a single fully observed unit."""
    if isinstance(m, CptModel):
        raise UnsupportedQueryError(
            "unit-level counterfactuals need invertible mechanisms; "
            "use interventional queries on discrete models"
        )
    u = abduct(m, observed)
    cut = intervene(m, do)
    out: dict[str, float] = {}
    for v in m.graph.topological_order:
        if v in cut.fixed:
            out[v] = cut.fixed[v]
        elif all(out[p] == observed[p] for p in m.graph.parents(v)):
            # same noise, same mechanism, same inputs: the factual value stands
            # (recomputing it would only add rounding error)
            out[v] = float(observed[v])
        else:
            total = cut.intercept[v] + u[cut.noise_name[v]]
            for p in cut.graph.parents(v):
                total += cut.coeff[(p, v)] * out[p]
            out[v] = total
    return {v: out[v] for v in m.nodes}


# ---------------------------------------------------------------------------
# Sampling and fitting


def simulate_arrays(m, n: int, seed: int, noise_std: Mapping[str, float] | None = None) -> dict[str, np.ndarray]:
    """Column-oriented sampler; see :func:`simulate`.

    Discrete columns hold label indices, linear columns hold floats.
    """
    if n < 1:
        raise ModelError("n must be at least 1")
    rng = np.random.default_rng(seed)
    cols: dict[str, np.ndarray] = {}
    if isinstance(m, LinearScm):
        std = dict(m.noise_std)
        if noise_std:
            std.update(noise_std)
        for v in m.graph.topological_order:
            if v in m.fixed:
                cols[v] = np.full(n, m.fixed[v])
                continue
            if v not in std:
                raise ModelError(f"no noise standard deviation for {v!r}")
            s = std[v]
            if not (s >= 0 and math.isfinite(s)):
                raise ModelError(f"invalid noise standard deviation {s!r} for {v!r}")
            col = m.intercept[v] + s * rng.standard_normal(n)
            for p in m.graph.parents(v):
                col = col + m.coeff[(p, v)] * cols[p]
            cols[v] = col
    elif isinstance(m, CptModel):
        for v in m.graph.topological_order:
            rows = m.cpt[v][tuple(cols[p] for p in m.graph.parents(v))]
            if rows.ndim == 1:
                rows = np.broadcast_to(rows, (n, rows.shape[0]))
            cum = np.cumsum(rows, axis=1)
            draw = rng.random(n)
            idx = (draw[:, None] >= cum[:, :-1]).sum(axis=1)
            cols[v] = idx
    else:
        raise TypeError(f"cannot simulate {type(m).__name__}")
    return {v: cols[v] for v in m.nodes}


def simulate(m, n: int, seed: int, noise_std: Mapping[str, float] | None = None) -> list[dict]:
    """``n`` independent rows drawn by ancestral sampling, reproducible from ``seed``.

    Linear models draw Gaussian noise with the model's (or the given)
    standard deviations; discrete models invert the CPT row's CDF.
    """
    cols = simulate_arrays(m, n, seed, noise_std)
    if isinstance(m, CptModel):
        out = {v: [m.domain[v][i] for i in cols[v]] for v in m.nodes}
    else:
        out = {v: cols[v].tolist() for v in m.nodes}
    return [{v: out[v][k] for v in m.nodes} for k in range(n)]


def _lad(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    # min sum|e| as a linear program over (beta, e+, e-)
    from scipy.optimize import linprog

    n, p = design.shape
    cost = np.concatenate([np.zeros(p), np.ones(2 * n)])
    a_eq = np.hstack([design, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * p + [(0, None)] * (2 * n)
    res = linprog(cost, A_eq=a_eq, b_eq=y, bounds=bounds, method="highs")
    if not res.success:
        raise ModelError(f"least-absolute-deviation fit failed: {res.message}")
    return res.x[:p]


def fit_linear(data: Sequence[Mapping[str, float]], g: Dag, method: str = "ols") -> LinearScm:
    """Regress every node on its parents plus an intercept.

    ``method="ols"`` is ordinary least squares; ``method="lad"`` minimises the
    sum of absolute residuals instead. The intercept becomes the node's
    intercept (noise mean) and the residual spread its ``noise_std``.
    """
    if method not in ("ols", "lad"):
        raise ValueError(f"unknown fit method {method!r}")
    n = len(data)
    need = max((len(g.parents(v)) for v in g.nodes), default=0) + 2
    if n < need:
        raise ModelError(f"need at least {need} rows, got {n}")
    cols = {}
    for v in g.nodes:
        try:
            cols[v] = np.array([float(row[v]) for row in data])
        except KeyError:
            raise ModelError(f"data rows lack column {v!r}") from None
    coeff, intercept, std = {}, {}, {}
    for v in g.nodes:
        ps = g.parents(v)
        design = np.column_stack([np.ones(n)] + [cols[p] for p in ps])
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise ModelError(f"design matrix for {v!r} is rank deficient")
        y = cols[v]
        if method == "ols":
            beta = np.linalg.lstsq(design, y, rcond=None)[0]
        else:
            beta = _lad(design, y)
        resid = y - design @ beta
        dof = n - design.shape[1]
        intercept[v] = float(beta[0])
        for p, b in zip(ps, beta[1:]):
            coeff[(p, v)] = float(b)
        std[v] = float(math.sqrt(float(resid @ resid) / dof))
    return LinearScm(g, coeff, intercept=intercept, noise_std=std)
