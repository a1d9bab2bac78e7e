"""Directed acyclic graphs over named nodes.

A :class:`Dag` is immutable once built. Set-valued query results are returned
as tuples sorted by label so that outputs are reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import CycleError, GraphError, PathLimitError, UnknownNodeError

DEFAULT_PATH_LIMIT = 10**6

FORWARD = "->"
BACKWARD = "<-"


@dataclass(frozen=True)
class Relatives:
    parents: tuple[str, ...]
    children: tuple[str, ...]
    ancestors: tuple[str, ...]
    descendants: tuple[str, ...]


@dataclass(frozen=True)
class Path:
    """A simple path with per-step orientation.

    ``steps[k]`` is ``FORWARD`` when the edge is ``nodes[k] -> nodes[k+1]`` and
    ``BACKWARD`` when it is ``nodes[k] <- nodes[k+1]``.
    """

    nodes: tuple[str, ...]
    steps: tuple[str, ...]

    def __post_init__(self):
        if len(self.nodes) != len(self.steps) + 1:
            raise GraphError("path needs exactly one step between consecutive nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError(f"path repeats a node: {self.nodes}")
        for s in self.steps:
            if s not in (FORWARD, BACKWARD):
                raise GraphError(f"bad step direction {s!r}")

    @property
    def is_directed(self) -> bool:
        return all(s == FORWARD for s in self.steps)

    def is_collider(self, k: int) -> bool:
        """True when interior node ``nodes[k]`` has both path edges pointing into it."""
        if not 0 < k < len(self.nodes) - 1:
            return False
        return self.steps[k - 1] == FORWARD and self.steps[k] == BACKWARD

    def __str__(self):
        out = [self.nodes[0]]
        for step, node in zip(self.steps, self.nodes[1:]):
            out.append(step)
            out.append(node)
        return "".join(out)


class Dag:
    """Directed acyclic graph with nodes kept in declaration order."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self._nodes: tuple[str, ...] = tuple(nodes)
        self._index = {}
        for v in self._nodes:
            if not isinstance(v, str) or not v:
                raise GraphError(f"node labels must be non-empty strings, got {v!r}")
            if v in self._index:
                raise GraphError(f"duplicate node {v!r}")
            self._index[v] = len(self._index)

        parents: dict[str, list[str]] = {v: [] for v in self._nodes}
        children: dict[str, list[str]] = {v: [] for v in self._nodes}
        seen = set()
        for edge in edges:
            a, b = edge
            for end in (a, b):
                if end not in self._index:
                    raise UnknownNodeError(end)
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            if (a, b) in seen:
                raise GraphError(f"duplicate edge {a}->{b}")
            seen.add((a, b))
            parents[b].append(a)
            children[a].append(b)

        key = self._index.__getitem__
        self._parents = {v: tuple(sorted(ps, key=key)) for v, ps in parents.items()}
        self._children = {v: tuple(sorted(cs, key=key)) for v, cs in children.items()}
        self._edges = frozenset(seen)
        self._order = self._toposort()
        self._desc_cache: dict[str, frozenset] = {}
        self._anc_cache: dict[str, frozenset] = {}

    def _toposort(self) -> tuple[str, ...]:
        # Kahn's algorithm; ties broken by declaration order so the result is
        # the declared order whenever that order is already topological.
        indeg = {v: len(self._parents[v]) for v in self._nodes}
        ready = [v for v in self._nodes if indeg[v] == 0]
        order = []
        heap = [(self._index[v], v) for v in ready]
        heapq.heapify(heap)
        while heap:
            _, v = heapq.heappop(heap)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, (self._index[c], c))
        if len(order) != len(self._nodes):
            raise CycleError(self._find_cycle({v for v in self._nodes if indeg[v] > 0}))
        return tuple(order)

    def _find_cycle(self, remaining: set) -> list[str]:
        # every remaining node has a remaining parent, so walking parents must revisit
        v = min(remaining, key=self._index.__getitem__)
        walk, pos = [], {}
        while v not in pos:
            pos[v] = len(walk)
            walk.append(v)
            v = next(p for p in self._parents[v] if p in remaining)
        cycle = walk[pos[v]:]
        cycle.reverse()
        return cycle

    # -- basic accessors -------------------------------------------------

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def edges(self) -> frozenset:
        return self._edges

    def sorted_edges(self) -> list[tuple[str, str]]:
        key = self._index.__getitem__
        return sorted(self._edges, key=lambda e: (key(e[0]), key(e[1])))

    @property
    def topological_order(self) -> tuple[str, ...]:
        return self._order

    def __contains__(self, v) -> bool:
        return v in self._index

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self):
        return hash((self._nodes, self._edges))

    def __repr__(self):
        edges = ", ".join(f"{a}->{b}" for a, b in self.sorted_edges())
        return f"Dag(nodes={list(self._nodes)}, edges=[{edges}])"

    def position(self, v: str) -> int:
        self._check(v)
        return self._index[v]

    def _check(self, *vs: str) -> None:
        for v in vs:
            if v not in self._index:
                raise UnknownNodeError(v)

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self._edges

    def parents(self, v: str) -> tuple[str, ...]:
        """Parents in declaration order (the CPT row order)."""
        self._check(v)
        return self._parents[v]

    def children(self, v: str) -> tuple[str, ...]:
        self._check(v)
        return self._children[v]

    def descendants(self, v: str) -> frozenset:
        self._check(v)
        if v not in self._desc_cache:
            self._desc_cache[v] = frozenset(_reach(v, self._children))
        return self._desc_cache[v]

    def ancestors(self, v: str) -> frozenset:
        self._check(v)
        if v not in self._anc_cache:
            self._anc_cache[v] = frozenset(_reach(v, self._parents))
        return self._anc_cache[v]

    def ancestors_of_set(self, vs: Iterable[str]) -> set:
        """Union of ancestors of ``vs``, including ``vs`` themselves."""
        out = set(vs)
        self._check(*out)
        for v in list(out):
            out |= self.ancestors(v)
        return out

    def sort_nodes(self, vs: Iterable[str]) -> tuple[str, ...]:
        """Order ``vs`` by declaration position."""
        vs = list(vs)
        self._check(*vs)
        return tuple(sorted(vs, key=self._index.__getitem__))

    # -- derived graphs --------------------------------------------------

    def remove_incoming(self, vs: Iterable[str]) -> "Dag":
        """Graph surgery: drop every edge pointing into ``vs``."""
        cut = set(vs)
        self._check(*cut)
        return Dag(self._nodes, [(a, b) for a, b in self.sorted_edges() if b not in cut])


def _reach(start, adjacency) -> set:
    seen = set()
    stack = list(adjacency[start])
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(adjacency[u])
    return seen


def build_dag(nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> Dag:
    return Dag(nodes, edges)


def relatives(g: Dag, v: str) -> Relatives:
    g._check(v)
    return Relatives(
        parents=tuple(sorted(g.parents(v))),
        children=tuple(sorted(g.children(v))),
        ancestors=tuple(sorted(g.ancestors(v))),
        descendants=tuple(sorted(g.descendants(v))),
    )


def undirected_paths(g: Dag, a: str, b: str, limit: int = DEFAULT_PATH_LIMIT) -> list[Path]:
    """All simple paths between ``a`` and ``b`` ignoring edge orientation.

    Paths are returned sorted lexicographically by their node-label sequence.
    Raises :class:`PathLimitError` once more than ``limit`` paths are found.
    """
    g._check(a, b)
    if a == b:
        raise GraphError("path endpoints must differ")
    nbrs = {
        v: sorted([(c, FORWARD) for c in g.children(v)] + [(p, BACKWARD) for p in g.parents(v)])
        for v in g.nodes
    }
    return _enumerate(a, b, nbrs, limit)


def directed_paths(g: Dag, a: str, b: str, limit: int = DEFAULT_PATH_LIMIT) -> list[Path]:
    """All simple directed paths ``a -> ... -> b``."""
    g._check(a, b)
    if a == b:
        raise GraphError("path endpoints must differ")
    nbrs = {v: [(c, FORWARD) for c in sorted(g.children(v))] for v in g.nodes}
    return _enumerate(a, b, nbrs, limit)


def _enumerate(a, b, nbrs, limit) -> list[Path]:
    found: list[Path] = []
    nodes, steps, on_path = [a], [], {a}

    def dfs(v):
        for u, d in nbrs[v]:
            if u in on_path:
                continue
            if u == b:
                if len(found) >= limit:
                    raise PathLimitError(limit)
                found.append(Path(tuple(nodes) + (u,), tuple(steps) + (d,)))
                continue
            nodes.append(u)
            steps.append(d)
            on_path.add(u)
            dfs(u)
            on_path.discard(u)
            nodes.pop()
            steps.pop()

    dfs(a)
    found.sort(key=lambda p: p.nodes)
    return found
