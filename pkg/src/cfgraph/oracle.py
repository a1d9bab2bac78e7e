"""Brute-force ground truth by exact enumeration of the joint distribution."""

from __future__ import annotations

import itertools
import logging
import math
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import OverlapError, StateSpaceError, UnknownNodeError
from .graph import Dag
from .scm import CptModel, intervene, label_index

log = logging.getLogger(__name__)

STATE_CAP = 2**20
COMPENSATED_ABOVE = 2**16
CI_TOLERANCE = 1e-10


class JointTable:
    """Probability of every full assignment, stored as a dense array.

    Axis ``k`` of :attr:`probs` indexes the domain of ``nodes[k]``.
    """

    def __init__(self, nodes: tuple[str, ...], domain: Mapping[str, tuple], probs: np.ndarray):
        self.nodes = tuple(nodes)
        self.domain = {v: tuple(domain[v]) for v in self.nodes}
        self.probs = probs
        self._axis = {v: k for k, v in enumerate(self.nodes)}
        self._marginals: dict[tuple, np.ndarray] = {}

    def __len__(self) -> int:
        return self.probs.size

    def items(self) -> Iterator[tuple[dict, float]]:
        for idx in itertools.product(*(range(len(self.domain[v])) for v in self.nodes)):
            yield {v: self.domain[v][i] for v, i in zip(self.nodes, idx)}, float(self.probs[idx])

    def prob(self, assignment: Mapping) -> float:
        idx = tuple(label_index(self.domain[v], assignment[v], v) for v in self.nodes)
        return float(self.probs[idx])

    def total(self) -> float:
        return math.fsum(self.probs.ravel().tolist())

    def axis(self, v: str) -> int:
        if v not in self._axis:
            raise UnknownNodeError(v)
        return self._axis[v]

    def marginal(self, nodes: Iterable[str]) -> np.ndarray:
        """Marginal table over ``nodes``, axes in the order given."""
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"repeated node in {nodes}")
        if nodes not in self._marginals:
            keep = sorted(self.axis(v) for v in nodes)
            drop = tuple(k for k in range(len(self.nodes)) if k not in keep)
            table = _sum_axes(self.probs, drop)
            kept_names = [self.nodes[k] for k in keep]
            self._marginals[nodes] = np.transpose(table, [kept_names.index(v) for v in nodes])
        return self._marginals[nodes]


def _sum_axes(arr: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    if not axes:
        return arr
    if arr.size <= COMPENSATED_ABOVE:
        return arr.sum(axis=axes)
    keep = [k for k in range(arr.ndim) if k not in axes]
    moved = np.moveaxis(arr, keep, list(range(len(keep))))
    out_shape = moved.shape[: len(keep)]
    flat = moved.reshape(int(np.prod(out_shape, dtype=np.int64)), -1)
    sums = np.array([math.fsum(row.tolist()) for row in flat])
    return sums.reshape(out_shape)


def enumerate_joint(m: CptModel, cap: int = STATE_CAP) -> JointTable:
    """Joint distribution as the product of all CPT entries, assignment by assignment."""
    shape = tuple(len(m.domain[v]) for v in m.nodes)
    size = math.prod(shape)
    if size > cap:
        raise StateSpaceError(size, cap)
    axis = {v: k for k, v in enumerate(m.nodes)}
    probs = np.ones(shape)
    for v in m.nodes:
        family = list(m.graph.parents(v)) + [v]
        table = m.cpt[v]
        order = sorted(range(len(family)), key=lambda k: axis[family[k]])
        table = np.transpose(table, order)
        expand = [1] * len(shape)
        for k in order:
            expand[axis[family[k]]] = shape[axis[family[k]]]
        probs = probs * table.reshape(expand)
    return JointTable(m.nodes, m.domain, probs)


def interventional_oracle(m: CptModel, do: Mapping, target: str, cap: int = STATE_CAP) -> dict:
    """P(target | do(...)) read off the enumerated mutilated model."""
    if target not in m.graph:
        raise UnknownNodeError(target)
    joint = enumerate_joint(intervene(m, do) if do else m, cap)
    dist = joint.marginal([target])
    return {lab: float(p) for lab, p in zip(m.domain[target], dist)}


def ci_test_exact(joint: JointTable, x, y, z=(), tol: float = CI_TOLERANCE) -> bool:
    """Exact conditional independence of ``x`` and ``y`` given ``z``."""
    x, y, z = (tuple(sorted(s)) for s in (x, y, z))
    for a, b in ((x, y), (x, z), (y, z)):
        if set(a) & set(b):
            raise OverlapError("x, y and z must be disjoint")
    table = joint.marginal(x + y + z)
    nx, ny = len(x), len(y)
    zshape = table.shape[nx + ny:]
    flat = table.reshape(
        int(np.prod(table.shape[:nx], dtype=np.int64)),
        int(np.prod(table.shape[nx:nx + ny], dtype=np.int64)),
        int(np.prod(zshape, dtype=np.int64)),
    )
    pz = flat.sum(axis=(0, 1))
    positive = pz > 0
    skipped = int((~positive).sum())
    if skipped:
        log.info("ci_test_exact: skipped %d zero-mass stratum(s)", skipped)
    flat = flat[:, :, positive]
    pz = pz[positive]
    cond = flat / pz
    px = cond.sum(axis=1)
    py = cond.sum(axis=0)
    gap = np.abs(cond - px[:, None, :] * py[None, :, :])
    return bool(np.all(gap <= tol))


# ---------------------------------------------------------------------------
# Random fixtures


def random_dag(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.4,
               prefix: str = "V") -> Dag:
    """Random DAG whose declared order is a random topological order."""
    names = [f"{prefix}{k}" for k in range(n_nodes)]
    perm = [names[k] for k in rng.permutation(n_nodes)]
    edges = [(perm[i], perm[j]) for i in range(n_nodes) for j in range(i + 1, n_nodes)
             if rng.random() < edge_prob]
    return Dag(names, edges)


def random_cpts(rng: np.random.Generator, g: Dag, domain_size: int = 2,
                low: float = 0.05, high: float = 0.95) -> CptModel:
    """Random CPTs with entries kept inside ``[low, high]``.

    Binary rows draw ``p`` uniformly from ``[low, high]``; larger domains
    normalise uniform weights, which keeps every entry strictly positive.
    """
    domain = {v: tuple(range(domain_size)) for v in g.nodes}
    cpt = {}
    for v in g.nodes:
        shape = tuple(domain_size for _ in g.parents(v))
        if domain_size == 2:
            p = rng.uniform(low, high, size=shape)
            table = np.stack([p, 1.0 - p], axis=-1)
        else:
            w = rng.uniform(low, high, size=shape + (domain_size,))
            table = w / w.sum(axis=-1, keepdims=True)
        cpt[v] = table
    return CptModel(g, domain, cpt)


def random_cpt_model(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.4,
                     domain_size: int = 2) -> CptModel:
    return random_cpts(rng, random_dag(rng, n_nodes, edge_prob), domain_size)


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
