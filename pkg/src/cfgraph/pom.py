"""Potential-outcome tables: assumption audits, matching imputation, stratified effects."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dseparation import AdjustmentError, check_backdoor
from .errors import CausalError, ZeroProbabilityError
from .oracle import enumerate_joint
from .scm import CptModel

NO_INTERFERENCE = "no interference between units and no hidden treatment versions (declared, not tested)"


@dataclass(frozen=True)
class PomTable:
    units: tuple
    covariates: tuple[tuple, ...]
    treatment: tuple[int, ...]
    outcome: tuple[float, ...]

    def __post_init__(self):
        n = len(self.units)
        if not (len(self.covariates) == len(self.treatment) == len(self.outcome) == n):
            raise CausalError("columns of the table differ in length")
        if len(set(self.units)) != n:
            raise CausalError("unit ids must be unique")
        widths = {len(row) for row in self.covariates}
        if len(widths) > 1:
            raise CausalError(f"covariate rows have differing widths {sorted(widths)}")
        for u, t in zip(self.units, self.treatment):
            if t not in (0, 1) or isinstance(t, float) and not t.is_integer():
                raise CausalError(f"unit {u!r}: treatment must be 0 or 1, got {t!r}")
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "covariates", tuple(tuple(r) for r in self.covariates))
        object.__setattr__(self, "treatment", tuple(int(t) for t in self.treatment))
        object.__setattr__(self, "outcome", tuple(float(y) for y in self.outcome))

    @classmethod
    def from_rows(cls, rows: Sequence[tuple]) -> "PomTable":
        """Build from ``(unit, covariates, treatment, outcome)`` rows."""
        rows = list(rows)
        return cls(
            tuple(r[0] for r in rows),
            tuple(tuple(r[1]) for r in rows),
            tuple(r[2] for r in rows),
            tuple(r[3] for r in rows),
        )

    def __len__(self) -> int:
        return len(self.units)

    @property
    def n_covariates(self) -> int:
        return len(self.covariates[0]) if self.covariates else 0


@dataclass(frozen=True)
class Violation:
    stratum: tuple
    arm: int            # the only treatment arm present
    count: int
    label: str          # "one-armed" or "singleton"


@dataclass
class ImputedUnit:
    unit: object
    treatment: int
    observed: float
    imputed: float | None
    matches: int

    @property
    def matched(self) -> bool:
        return self.imputed is not None

    @property
    def y1(self) -> float | None:
        return self.observed if self.treatment == 1 else self.imputed

    @property
    def y0(self) -> float | None:
        return self.observed if self.treatment == 0 else self.imputed


@dataclass
class ImputationReport:
    method: str
    units: list[ImputedUnit]
    radius: float | None = None
    dropped_dimensions: list[int] = field(default_factory=list)
    premises: tuple[str, ...] = (NO_INTERFERENCE,)

    def unit(self, uid) -> ImputedUnit:
        for row in self.units:
            if row.unit == uid:
                return row
        raise KeyError(uid)

    @property
    def unmatched(self) -> list:
        return [r.unit for r in self.units if not r.matched]

    def effect_on_treated(self) -> float:
        """Mean of observed minus imputed outcome over matched treated units."""
        diffs = [r.observed - r.imputed for r in self.units if r.treatment == 1 and r.matched]
        if not diffs:
            raise CausalError("no matched treated units")
        return math.fsum(diffs) / len(diffs)


@dataclass
class AteResult:
    e_y1: float
    e_y0: float
    ate: float
    n_used: int
    excluded: list[Violation]
    premises: tuple[str, ...] = (NO_INTERFERENCE,)


def _is_categorical(value) -> bool:
    if isinstance(value, (bool, np.bool_, str, int, np.integer)):
        return True
    return False


def _require_categorical(t: PomTable) -> None:
    for u, row in zip(t.units, t.covariates):
        for k, v in enumerate(row):
            if not _is_categorical(v):
                raise CausalError(
                    f"unit {u!r}: covariate {k} is real-valued ({v!r}); bin it before stratifying"
                )


def _strata(t: PomTable) -> dict[tuple, list[int]]:
    groups: dict[tuple, list[int]] = defaultdict(list)
    for i, row in enumerate(t.covariates):
        groups[row].append(i)
    return groups


def _audit(t: PomTable, groups) -> list[Violation]:
    out = []
    for x, rows in groups.items():
        arms = {t.treatment[i] for i in rows}
        if len(arms) == 1:
            label = "singleton" if len(rows) == 1 else "one-armed"
            out.append(Violation(x, arms.pop(), len(rows), label))
    return out


def check_positivity(t: PomTable) -> list[Violation]:
    """Strata in which every unit shares one treatment arm. Empty means the audit passes."""
    _require_categorical(t)
    return _audit(t, _strata(t))


def exact_match_impute(t: PomTable) -> ImputationReport:
    """Impute each unit's missing arm by the mean outcome of opposite-arm units with identical covariates."""
    _require_categorical(t)
    groups = _strata(t)
    units = []
    for i, u in enumerate(t.units):
        pool = [t.outcome[j] for j in groups[t.covariates[i]] if t.treatment[j] != t.treatment[i]]
        imputed = math.fsum(pool) / len(pool) if pool else None
        units.append(ImputedUnit(u, t.treatment[i], t.outcome[i], imputed, len(pool)))
    return ImputationReport("exact", units)


def caliper_match_impute(t: PomTable, radius: float) -> ImputationReport:
    """Match opposite-arm units within Euclidean ``radius`` on standardized covariates."""
    if not radius > 0:
        raise CausalError(f"radius must be positive, got {radius!r}")
    try:
        x = np.asarray(t.covariates, dtype=float).reshape(len(t), t.n_covariates)
    except (TypeError, ValueError) as exc:
        raise CausalError("caliper matching needs real-valued covariates") from exc
    sd = x.std(axis=0)
    dropped = [int(k) for k in np.flatnonzero(sd == 0)]
    keep = sd > 0
    z = (x[:, keep] - x[:, keep].mean(axis=0)) / sd[keep]
    treat = np.asarray(t.treatment)
    y = np.asarray(t.outcome)
    units = []
    for i, u in enumerate(t.units):
        dist = np.sqrt(((z - z[i]) ** 2).sum(axis=1))
        hit = (treat != treat[i]) & (dist <= radius)
        pool = y[hit].tolist()
        imputed = math.fsum(pool) / len(pool) if pool else None
        units.append(ImputedUnit(u, int(treat[i]), float(y[i]), imputed, len(pool)))
    return ImputationReport("caliper", units, radius=float(radius), dropped_dimensions=dropped)


def ate(t: PomTable) -> AteResult:
    """Stratified estimator of E[Y(1)], E[Y(0)] and their difference.

    Strata failing positivity are dropped and reported; the remaining strata
    are weighted by their share of the retained units.
    """
    _require_categorical(t)
    groups = _strata(t)
    excluded = _audit(t, groups)
    bad = {v.stratum for v in excluded}
    kept = {x: rows for x, rows in groups.items() if x not in bad}
    n_used = sum(len(rows) for rows in kept.values())
    if n_used == 0:
        raise CausalError("no stratum contains both treatment arms")
    parts1, parts0 = [], []
    for x, rows in kept.items():
        w = len(rows) / n_used
        y1 = [t.outcome[i] for i in rows if t.treatment[i] == 1]
        y0 = [t.outcome[i] for i in rows if t.treatment[i] == 0]
        parts1.append(w * math.fsum(y1) / len(y1))
        parts0.append(w * math.fsum(y0) / len(y0))
    e1, e0 = math.fsum(parts1), math.fsum(parts0)
    return AteResult(e1, e0, e1 - e0, n_used, excluded)


def adjusted_expectation(m: CptModel, t_node: str, y_node: str, x_nodes: Sequence[str], t_value) -> float:
    """E[Y | do(T=t)] as the covariate-weighted mean of E[Y | T=t, X=x], read off the exact joint."""
    g = m.graph
    x_nodes = tuple(x_nodes)
    if not check_backdoor(g, {t_node}, y_node, x_nodes):
        raise AdjustmentError(f"{list(x_nodes)} does not satisfy the back-door criterion for "
                              f"{t_node!r} -> {y_node!r}")
    try:
        y_values = np.array([float(v) for v in m.domain[y_node]])
    except (TypeError, ValueError) as exc:
        raise CausalError(f"outcome {y_node!r} has non-numeric labels") from exc
    joint = enumerate_joint(m)
    table = joint.marginal((t_node,) + x_nodes + (y_node,))
    ti = m.index_of(t_node, t_value)
    slab = table[ti]                                   # axes: x_nodes..., y
    px = joint.marginal(x_nodes) if x_nodes else np.array(1.0)
    mass = slab.sum(axis=-1)
    parts = []
    for idx in np.ndindex(*px.shape):
        if px[idx] == 0:
            continue
        if mass[idx] == 0:
            event = {t_node: t_value}
            event.update({v: m.domain[v][k] for v, k in zip(x_nodes, idx)})
            raise ZeroProbabilityError(event)
        row = slab[idx]
        parts.append(float(px[idx]) * math.fsum((row * y_values).tolist()) / float(mass[idx]))
    return math.fsum(parts)
