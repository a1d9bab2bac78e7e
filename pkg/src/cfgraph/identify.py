"""Symbolic identification of P(y | do(sources)) by forward recursion.

The recursion walks forward from the sources toward the target. When every
source acts on the target only through a direct edge it returns an
observational conditional, back-door adjusted if needed. Otherwise the
sources' first mediators (closed under their non-source ancestors, so every
factor's parents are already fixed) are summed out and the remaining query is
solved recursively with those mediators as new sources.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .dseparation import AdjustmentError, check_backdoor, default_adjustment_set
from .errors import CausalError, GraphError, InternalInvariantError, ZeroProbabilityError
from .graph import Dag, Path, directed_paths
from .oracle import JointTable, enumerate_joint
from .scm import CptModel, label_index

log = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Expression tree


@dataclass(frozen=True)
class Conditional:
    target: str
    given: tuple[str, ...] = ()


@dataclass(frozen=True)
class Marginal:
    nodes: tuple[str, ...]


@dataclass(frozen=True)
class SumOver:
    node: str
    body: "Expression"


@dataclass(frozen=True)
class Product:
    factors: tuple["Expression", ...]


Expression = Union[Conditional, Marginal, SumOver, Product]


@dataclass(frozen=True)
class QuerySpec:
    target: str
    sources: tuple[str, ...]
    source_values: Mapping | None = None

    def __post_init__(self):
        sources = tuple(self.sources)
        object.__setattr__(self, "sources", sources)
        if not sources:
            raise CausalError("at least one source is required")
        if len(set(sources)) != len(sources):
            raise CausalError("sources repeat a node")
        if self.target in sources:
            raise CausalError(f"target {self.target!r} is among the sources")


def free_slots(e: Expression) -> set:
    if isinstance(e, Conditional):
        return {e.target, *e.given}
    if isinstance(e, Marginal):
        return set(e.nodes)
    if isinstance(e, SumOver):
        return free_slots(e.body) - {e.node}
    if isinstance(e, Product):
        out = set()
        for f in e.factors:
            out |= free_slots(f)
        return out
    raise TypeError(f"not an expression: {e!r}")


def expression_size(e: Expression) -> int:
    """Number of nodes in the fully expanded tree."""
    if isinstance(e, SumOver):
        return 1 + expression_size(e.body)
    if isinstance(e, Product):
        return 1 + sum(expression_size(f) for f in e.factors)
    return 1


def _sum_chain(e: SumOver) -> tuple[list[str], Expression]:
    bound = []
    while isinstance(e, SumOver):
        bound.append(e.node)
        e = e.body
    return bound, e


def render_expression(e: Expression) -> str:
    """Probability notation, e.g. ``Σ_{x} P(Y|T,X=x) P(X=x)``.

    Summed nodes are written ``N=n`` with the lower-cased label as the value
    symbol; free nodes are written bare. Sums nested inside a product are
    parenthesised.
    """
    return _render(e, frozenset())


def _slot(v: str, bound) -> str:
    return f"{v}={v.lower()}" if v in bound else v


def _render(e, bound) -> str:
    if isinstance(e, Conditional):
        head = _slot(e.target, bound)
        if not e.given:
            return f"P({head})"
        return f"P({head}|{','.join(_slot(v, bound) for v in e.given)})"
    if isinstance(e, Marginal):
        return f"P({','.join(_slot(v, bound) for v in e.nodes)})"
    if isinstance(e, SumOver):
        names, body = _sum_chain(e)
        inner = _render(body, bound | set(names))
        return f"Σ_{{{','.join(v.lower() for v in names)}}} {inner}"
    if isinstance(e, Product):
        parts = []
        for f in e.factors:
            text = _render(f, bound)
            parts.append(f"({text})" if isinstance(f, (SumOver, Product)) else text)
        return " ".join(parts)
    raise TypeError(f"not an expression: {e!r}")


def expression_to_dict(e: Expression) -> dict:
    if isinstance(e, Conditional):
        return {"kind": "conditional", "target": e.target, "given": list(e.given)}
    if isinstance(e, Marginal):
        return {"kind": "marginal", "nodes": list(e.nodes)}
    if isinstance(e, SumOver):
        return {"kind": "sum", "node": e.node, "body": expression_to_dict(e.body)}
    return {"kind": "product", "factors": [expression_to_dict(f) for f in e.factors]}


def expression_from_dict(d: Mapping) -> Expression:
    kind = d["kind"]
    if kind == "conditional":
        return Conditional(d["target"], tuple(d.get("given", ())))
    if kind == "marginal":
        return Marginal(tuple(d["nodes"]))
    if kind == "sum":
        return SumOver(d["node"], expression_from_dict(d["body"]))
    if kind == "product":
        return Product(tuple(expression_from_dict(f) for f in d["factors"]))
    raise CausalError(f"unknown expression kind {kind!r}")


# ---------------------------------------------------------------------------
# Pathways


def causal_pathways(g: Dag, sources: Iterable[str], target: str) -> list[Path]:
    sources = list(sources)
    g._check(target, *sources)
    if target in sources:
        raise CausalError(f"target {target!r} is among the sources")
    out = []
    for s in sources:
        out.extend(directed_paths(g, s, target))
    out.sort(key=lambda p: p.nodes)
    return out


def first_mediators(g: Dag, source: str, target: str) -> tuple[str, ...]:
    """Children of ``source`` that lie on a directed path to ``target``."""
    g._check(source, target)
    upstream = g.ancestors(target)
    found = [c for c in g.children(source) if c != target and c in upstream]
    if not found:
        raise GraphError(f"no directed path of length >= 2 from {source!r} to {target!r}")
    return tuple(sorted(found))


def _has_backdoor_path(g: Dag, s: str, y: str) -> bool:
    # A simple path leaving s through a parent p reaches y iff p and y are
    # connected in the skeleton once s is removed.
    starts = [p for p in g.parents(s)]
    if not starts:
        return False
    seen = {s}
    stack = list(starts)
    while stack:
        v = stack.pop()
        if v == y:
            return True
        if v in seen:
            continue
        seen.add(v)
        stack.extend(g.parents(v))
        stack.extend(g.children(v))
    return False


# ---------------------------------------------------------------------------
# The recursion


class _Solver:
    def __init__(self, g: Dag, notes: list | None):
        self.g = g
        self.notes = notes
        self.memo: dict = {}

    def note(self, msg: str) -> None:
        log.warning(msg)
        if self.notes is not None:
            self.notes.append(msg)

    def solve(self, y: str, sources: Sequence[str], context: frozenset) -> Expression:
        key = (y, tuple(sources), context)
        if key not in self.memo:
            self.memo[key] = self._solve(y, tuple(sources), context)
        return self.memo[key]

    def _solve(self, y, sources, context) -> Expression:
        g = self.g
        mutilated = g.remove_incoming(sources)
        upstream = mutilated.ancestors(y)
        relevant = tuple(s for s in sources if s in upstream)
        for s in sources:
            if s not in upstream and s not in g.ancestors(y):
                self.note(f"{s} has no directed path to {y}; P({y}|do({s}),...) does not depend on {s}")
        if not relevant:
            return Marginal((y,))

        src = set(sources)
        mediators = {c for s in relevant for c in g.children(s)
                     if c != y and c in upstream and c not in src}
        if not mediators:
            return self._direct(y, relevant, context)

        # Close the mediators under their non-source ancestors so that each
        # mediator factor conditions only on already-fixed nodes.
        block = mutilated.ancestors_of_set(mediators) - src
        block = [v for v in g.topological_order if v in block]
        inner_sources = g.sort_nodes(set(relevant) | set(block))
        inner = self.solve(y, inner_sources, context | frozenset(block))
        factors = [inner]
        for k in block:
            pa = g.parents(k)
            factors.append(Conditional(k, pa) if pa else Marginal((k,)))
        body: Expression = Product(tuple(factors))
        for k in reversed(block):
            body = SumOver(k, body)
        return body

    def _direct(self, y, relevant, context) -> Expression:
        g = self.g
        pa = g.parents(y)
        if set(pa) <= set(relevant):
            return Conditional(y, relevant)
        if not any(_has_backdoor_path(g, s, y) for s in relevant):
            return Conditional(y, relevant)
        try:
            w = default_adjustment_set(g, relevant, y)
            if set(w) & context:
                raise AdjustmentError("parents of the sources are already bound")
        except AdjustmentError as exc:
            # The target's other parents are never downstream of a source here,
            # so adjusting for them is always valid.
            w = tuple(v for v in pa if v not in relevant)
            log.debug("falling back to target parents %s (%s)", w, exc)
            if not check_backdoor(g, relevant, y, w, condition_on_treatments=True):
                raise InternalInvariantError(
                    f"no verified adjustment set for {y} given do({', '.join(relevant)})"
                ) from exc
        if not w:
            return Conditional(y, relevant)
        w = g.sort_nodes(w)
        body: Expression = Product((Conditional(y, tuple(relevant) + w), Marginal(w)))
        for v in reversed(w):
            body = SumOver(v, body)
        return body


def fci(g: Dag, q: QuerySpec, notes: list | None = None) -> Expression:
    """Identify ``P(q.target | do(q.sources))`` as an observational expression.

    The graph is taken to be causally sufficient. Sources with no directed
    path to the target are reported through ``notes`` (and the module logger)
    and have no effect on the result.
    """
    g._check(q.target, *q.sources)
    return _Solver(g, notes).solve(q.target, q.sources, frozenset(q.sources))


# ---------------------------------------------------------------------------
# Numeric evaluation


def evaluate_expression(e: Expression, m: CptModel, bindings: Mapping | None = None,
                        joint: JointTable | None = None) -> dict:
    """Distribution over the single unbound slot of ``e`` under model ``m``.

    Every conditional and marginal is read from the exactly enumerated joint.
    """
    bindings = dict(bindings or {})
    if joint is None:
        joint = enumerate_joint(m)
    free = free_slots(e)
    unbound = sorted(free - set(bindings))
    if len(unbound) != 1:
        raise CausalError(f"expected exactly one unbound slot, found {unbound}")
    target = unbound[0]
    env = {v: label_index(m.domain[v], x, v) for v, x in bindings.items() if v in free}
    ev = _Evaluator(joint, m.domain)
    out = {}
    for i, lab in enumerate(m.domain[target]):
        env[target] = i
        out[lab] = ev.value(e, env)
    total = math.fsum(out.values())
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE or min(out.values()) < 0:
        raise InternalInvariantError(f"expression evaluated to a non-distribution: {out}")
    return out


class _Evaluator:
    def __init__(self, joint: JointTable, domain):
        self.joint = joint
        self.domain = domain

    def value(self, e, env) -> float:
        if isinstance(e, Conditional):
            nodes = (e.target,) + tuple(e.given)
            num = float(self.joint.marginal(nodes)[tuple(env[v] for v in nodes)])
            if not e.given:
                return num
            den = float(self.joint.marginal(e.given)[tuple(env[v] for v in e.given)])
            if den <= 0:
                raise ZeroProbabilityError({v: self.domain[v][env[v]] for v in e.given})
            return num / den
        if isinstance(e, Marginal):
            return float(self.joint.marginal(e.nodes)[tuple(env[v] for v in e.nodes)])
        if isinstance(e, SumOver):
            saved = env.get(e.node)
            parts = []
            for i in range(len(self.domain[e.node])):
                env[e.node] = i
                parts.append(self.value(e.body, env))
            if saved is None:
                env.pop(e.node, None)
            else:
                env[e.node] = saved
            return math.fsum(parts)
        if isinstance(e, Product):
            acc = 1.0
            # weights come last in a product; evaluating them first skips
            # conditionals on zero-probability events
            for f in reversed(e.factors):
                acc *= self.value(f, env)
                if acc == 0.0:
                    break
            return acc
        raise TypeError(f"not an expression: {e!r}")


def identify_and_evaluate(m: CptModel, target: str, do: Mapping, notes: list | None = None) -> dict:
    """Convenience: ``evaluate_expression(fci(...))`` for concrete source values."""
    e = fci(m.graph, QuerySpec(target, tuple(do)), notes)
    return evaluate_expression(e, m, do)
