"""Blocking, d-separation and the back-door criterion."""

from __future__ import annotations

from collections import deque
from typing import Iterable

from .errors import CausalError, GraphError, OverlapError
from .graph import BACKWARD, FORWARD, Dag, Path, undirected_paths


class AdjustmentError(CausalError):
    """The parents-of-treatments set failed the back-door check."""


def _as_set(g: Dag, nodes: Iterable[str] | str) -> frozenset:
    if isinstance(nodes, str):
        nodes = [nodes]
    out = frozenset(nodes)
    g._check(*out)
    return out


def _disjoint(**sets) -> None:
    names = list(sets)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            common = sets[a] & sets[b]
            if common:
                raise OverlapError(f"sets {a} and {b} overlap on {sorted(common)}")


def path_blocked(g: Dag, p: Path, z: Iterable[str]) -> bool:
    """Whether conditioning on ``z`` blocks path ``p``.

    An interior node blocks when it is a collider that is neither in ``z`` nor
    an ancestor of a node in ``z``, or when it is a non-collider in ``z``.
    """
    z = _as_set(g, z)
    g._check(*p.nodes)
    for (a, b), step in zip(zip(p.nodes, p.nodes[1:]), p.steps):
        edge = (a, b) if step == FORWARD else (b, a)
        if not g.has_edge(*edge):
            raise GraphError(f"malformed path {p}: missing edge {edge[0]}->{edge[1]}")
    if p.nodes[0] in z or p.nodes[-1] in z:
        raise OverlapError("conditioning set contains a path endpoint")
    for k in range(1, len(p.nodes) - 1):
        v = p.nodes[k]
        if p.is_collider(k):
            if v not in z and not (g.descendants(v) & z):
                return True
        elif v in z:
            return True
    return False


def reachable(g: Dag, sources: Iterable[str], given: Iterable[str]) -> set:
    """Nodes connected to ``sources`` by a path that ``given`` leaves active.

    Linear-time reachability over (node, direction) states: "up" means the
    node was entered from a child, "down" from a parent.
    """
    z = _as_set(g, given)
    sources = _as_set(g, sources)
    active_colliders = g.ancestors_of_set(z)
    seen = set()
    found = set()
    queue = deque((s, "up") for s in sources)
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in seen:
            continue
        seen.add((v, direction))
        if v not in z:
            found.add(v)
        if direction == "up" and v not in z:
            queue.extend((p, "up") for p in g.parents(v))
            queue.extend((c, "down") for c in g.children(v))
        elif direction == "down":
            if v not in z:
                queue.extend((c, "down") for c in g.children(v))
            if v in active_colliders:
                queue.extend((p, "up") for p in g.parents(v))
    return found - sources


def d_separated(g: Dag, x, y, z=()) -> bool:
    x, y, z = _as_set(g, x), _as_set(g, y), _as_set(g, z)
    if not x or not y:
        raise CausalError("x and y must be non-empty")
    _disjoint(x=x, y=y, z=z)
    return not (reachable(g, x, z) & y)


def d_separated_by_paths(g: Dag, x, y, z=()) -> bool:
    """Reference implementation: enumerate every path and test blocking."""
    x, y, z = _as_set(g, x), _as_set(g, y), _as_set(g, z)
    _disjoint(x=x, y=y, z=z)
    for a in sorted(x):
        for b in sorted(y):
            for p in undirected_paths(g, a, b):
                if not path_blocked(g, p, z):
                    return False
    return True


def backdoor_paths(g: Dag, t: str, y: str) -> list[Path]:
    return [p for p in undirected_paths(g, t, y) if p.steps[0] == BACKWARD]


def _cut_outgoing(g: Dag, v: str) -> Dag:
    return Dag(g.nodes, [e for e in g.sorted_edges() if e[0] != v])


def check_backdoor(g: Dag, t, y: str, w=(), condition_on_treatments: bool = False) -> bool:
    """Back-door criterion for treatment set ``t``, outcome ``y`` and set ``w``.

    True iff no node of ``w`` descends from a treatment, and for every
    treatment ``ti`` the set ``w`` blocks each path from ``ti`` to ``y`` that
    starts with an arrow into ``ti``.

    With ``condition_on_treatments`` the blocking set for ``ti`` is ``w`` plus
    the other treatments, which is the condition needed when the adjustment
    formula conditions on all treatments jointly.
    """
    t = _as_set(g, t)
    w = _as_set(g, w)
    g._check(y)
    _disjoint(t=t, y=frozenset([y]), w=w)
    for ti in t:
        if g.descendants(ti) & w:
            return False
    for ti in sorted(t):
        given = w | (t - {ti}) if condition_on_treatments else w
        # Paths entering ti are exactly the paths of the graph without ti's out-edges.
        # Without the other treatments in the blocking set, rule 1 keeps it free of
        # ti's descendants, so collider activation is unchanged by the cut.
        if not d_separated(_cut_outgoing(g, ti), {ti}, {y}, given - {y}):
            return False
    return True


def default_adjustment_set(g: Dag, t, y: str) -> tuple[str, ...]:
    """Union of the treatments' parents, minus the treatments; verified before return."""
    t = _as_set(g, t)
    w = set()
    for ti in t:
        w.update(g.parents(ti))
    w -= t
    if y in w:
        raise AdjustmentError(f"outcome {y!r} is a parent of a treatment")
    if not check_backdoor(g, t, y, w):
        raise AdjustmentError(
            f"parents of {sorted(t)} fail the back-door check for {y!r}: {sorted(w)}"
        )
    return tuple(sorted(w))
