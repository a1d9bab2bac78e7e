"""Command-line driver.

    cfgraph --model PATH [--seed N] [--output json|table] SUBCOMMAND [options]

Exit status: 0 on success, 1 on a user error, 2 on an internal failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import shlex
import sys
from typing import Callable, Sequence

from . import io as model_io
from .dseparation import backdoor_paths, check_backdoor, d_separated, default_adjustment_set
from .errors import CausalError, InternalInvariantError
from .graph import Dag
from .identify import QuerySpec, evaluate_expression, expression_to_dict, fci, render_expression
from .mediation import causal_steps, difference_test, fit_mediation, sobel_test
from .pom import PomTable, ate, caliper_match_impute, check_positivity, exact_match_impute
from .scm import CptModel, LinearScm, counterfactual, predict, simulate
from .stbn import StbnTemplate, stbn_query, unroll

SIG_DIGITS = 12


class UsageError(CausalError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Argument helpers


def _scalar(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _names(text: str | None) -> list[str]:
    if not text:
        return []
    return [s.strip() for s in text.split(",") if s.strip()]


def _assignments(text: str | None) -> dict:
    out = {}
    for item in _names(text):
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        out[name.strip()] = _scalar(value)
    return out


def _round(x):
    if isinstance(x, bool) or x is None or isinstance(x, (str, int)):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            return x
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if hasattr(x, "item"):
        return _round(x.item())
    return x


def _graph_of(model) -> Dag:
    if isinstance(model, Dag):
        return model
    if isinstance(model, (LinearScm, CptModel)):
        return model.graph
    raise UsageError(f"a {model_io.kind_of(model)} model has no causal graph for this query")


def _need(model, *types, what: str):
    if not isinstance(model, types):
        raise UsageError(f"{what} needs a {' or '.join(model_io.kind_of_type(t) for t in types)} "
                         f"model, got {model_io.kind_of(model)}")
    return model


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(model, args) -> dict:
    kind = model_io.kind_of(model)
    out = {"kind": kind, "valid": True}
    if isinstance(model, (Dag, LinearScm, CptModel)):
        g = _graph_of(model)
        out.update(nodes=len(g.nodes), edges=len(g.edges), topological_order=list(g.topological_order))
    elif isinstance(model, StbnTemplate):
        out.update(variables=list(model.variables), max_lag=model.max_lag, edges=len(model.lagged_edges))
    else:
        out.update(units=len(model), covariates=model.n_covariates)
    return out


def cmd_dsep(model, args) -> dict:
    g = _graph_of(model)
    return {"d_separated": d_separated(g, _names(args.x), _names(args.y), _names(args.given))}


def cmd_backdoor(model, args) -> dict:
    g = _graph_of(model)
    t = _names(args.treatment)
    if args.adjust is not None:
        w = _names(args.adjust)
        return {"adjust": w, "satisfied": check_backdoor(g, t, args.outcome, w)}
    paths = []
    for ti in t:
        paths.extend(str(p) for p in backdoor_paths(g, ti, args.outcome))
    return {"adjustment_set": list(default_adjustment_set(g, t, args.outcome)), "backdoor_paths": paths}


def cmd_identify(model, args) -> dict:
    g = _graph_of(model)
    notes: list = []
    e = fci(g, QuerySpec(args.target, tuple(_names(args.do))), notes)
    return {"expression": render_expression(e), "tree": expression_to_dict(e), "notes": notes}


def cmd_do(model, args) -> dict:
    do = _assignments(args.do)
    if isinstance(model, LinearScm):
        values = predict(model, do)
        return {args.target: values[args.target]} if args.target else values
    m = _need(model, CptModel, LinearScm, what="do")
    if not args.target:
        raise UsageError("do on a cpt_model needs --target")
    notes: list = []
    e = fci(m.graph, QuerySpec(args.target, tuple(do)), notes)
    dist = evaluate_expression(e, m, do)
    return {"target": args.target, "distribution": {str(k): v for k, v in dist.items()},
            "expression": render_expression(e), "notes": notes}


def cmd_counterfactual(model, args) -> dict:
    m = _need(model, LinearScm, CptModel, what="counterfactual")
    values = counterfactual(m, _assignments(args.observe), _assignments(args.do))
    targets = _names(args.target) or list(values)
    return {v: values[v] for v in targets}


def cmd_simulate(model, args) -> dict:
    m = _need(model, LinearScm, CptModel, what="simulate")
    return {"rows": simulate(m, args.n, args.seed)}


def cmd_unroll(model, args) -> dict:
    tmpl = _need(model, StbnTemplate, what="unroll")
    u = unroll(tmpl, args.horizon)
    return {"horizon": u.horizon, "nodes": list(u.dag.nodes), "edges": [list(e) for e in u.dag.sorted_edges()]}


def cmd_stbn_query(model, args) -> dict:
    tmpl = _need(model, StbnTemplate, what="stbn-query")
    cpts = model_io.load_model(args.cpts)
    if not isinstance(cpts, CptModel):
        raise UsageError("--cpts must name a cpt_model document over the unrolled graph")
    notes: list = []
    dist = stbn_query(tmpl, cpts, args.target, _assignments(args.do), notes)
    return {"target": args.target, "distribution": {str(k): v for k, v in dist.items()}, "notes": notes}


def cmd_match(model, args) -> dict:
    t = _need(model, PomTable, what="match")
    if args.method == "exact":
        rep = exact_match_impute(t)
    else:
        if args.radius is None:
            raise UsageError("caliper matching needs --radius")
        rep = caliper_match_impute(t, args.radius)
    return {
        "method": rep.method,
        "radius": rep.radius,
        "dropped_dimensions": rep.dropped_dimensions,
        "premises": list(rep.premises),
        "units": [{"unit": r.unit, "treatment": r.treatment, "observed": r.observed,
                   "imputed": r.imputed, "matches": r.matches} for r in rep.units],
    }


def _violations(vs) -> list:
    return [{"stratum": list(v.stratum), "arm": v.arm, "count": v.count, "label": v.label} for v in vs]


def cmd_ate(model, args) -> dict:
    t = _need(model, PomTable, what="ate")
    res = ate(t)
    return {"e_y1": res.e_y1, "e_y0": res.e_y0, "ate": res.ate, "n_used": res.n_used,
            "excluded": _violations(res.excluded), "positivity_violations": _violations(check_positivity(t)),
            "premises": list(res.premises)}


def cmd_mediate(model, args) -> dict:
    names = (args.treatment, args.mediator, args.outcome)
    if args.data:
        with open(args.data, encoding="utf-8") as fh:
            cols = model_io.read_columns_csv(fh.read())
        missing = [c for c in names if c not in cols]
        if missing:
            raise UsageError(f"data lacks column(s) {missing}")
        rows = list(zip(*(cols[c] for c in names)))
    else:
        m = _need(model, LinearScm, what="mediate without --data")
        rows = [tuple(r[c] for c in names) for r in simulate(m, args.n, args.seed)]
    fit = fit_mediation(rows)
    steps = causal_steps(fit, args.alpha)
    sob, diff = sobel_test(fit), difference_test(fit)
    return {
        "fit": {k: getattr(fit, k) for k in ("a", "b", "c", "b_total", "se_a", "se_b", "se_c",
                                            "se_b_total", "n")},
        "indirect": fit.indirect,
        "causal_steps": {"detected": steps.detected, "a_significant": steps.a_significant,
                         "b_significant": steps.b_significant, "c_significant": steps.c_significant,
                         "direct_smaller": steps.direct_smaller, "alpha": steps.alpha},
        "sobel": {"statistic": sob.statistic, "p": sob.p},
        "difference": {"statistic": diff.statistic, "p": diff.p, "degenerate": diff.degenerate},
    }


# ---------------------------------------------------------------------------
# Parser


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--model", default=d, help="model document (.json) or POM table (.csv)")
    p.add_argument("--seed", type=int, default=d if suppress else 0)
    p.add_argument("--output", choices=("json", "table"), default=d if suppress else "json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfgraph", description="Causal graph queries from the command line.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, fn: Callable, help: str):
        p = sub.add_parser(name, help=help)
        _global_flags(p, suppress=True)
        p.set_defaults(handler=fn)
        return p

    add("validate", cmd_validate, "check a model document")
    p = add("dsep", cmd_dsep, "d-separation test")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", default="")
    p = add("backdoor", cmd_backdoor, "back-door check or default adjustment set")
    p.add_argument("--treatment", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--adjust")
    p = add("identify", cmd_identify, "symbolic interventional expression")
    p.add_argument("--do", required=True, help="comma-separated source nodes")
    p.add_argument("--target", required=True)
    p = add("do", cmd_do, "numeric interventional query")
    p.add_argument("--do", required=True, help="NAME=VALUE,...")
    p.add_argument("--target")
    p = add("counterfactual", cmd_counterfactual, "abduction, action, prediction")
    p.add_argument("--observe", required=True)
    p.add_argument("--do", required=True)
    p.add_argument("--target")
    p = add("simulate", cmd_simulate, "draw samples")
    p.add_argument("--n", type=int, default=10)
    p = add("unroll", cmd_unroll, "expand a lag template")
    p.add_argument("--horizon", type=int, required=True)
    p = add("stbn-query", cmd_stbn_query, "interventional query on an unrolled template")
    p.add_argument("--cpts", required=True, help="cpt_model document over the unrolled graph")
    p.add_argument("--target", required=True, help="composite label such as Y@2")
    p.add_argument("--do", default="", help="LABEL=VALUE,...")
    p = add("match", cmd_match, "impute missing potential outcomes")
    p.add_argument("--method", choices=("exact", "caliper"), default="exact")
    p.add_argument("--radius", type=float)
    add("ate", cmd_ate, "stratified average treatment effect")
    p = add("mediate", cmd_mediate, "mediation regressions and tests")
    p.add_argument("--treatment", required=True)
    p.add_argument("--mediator", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--data", help="CSV with named numeric columns")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    return parser


def _dispatch(model, args) -> dict:
    if getattr(args, "handler", None) is None:
        raise UsageError("no subcommand given")
    return _round(args.handler(model, args))


def run_query(model, query: str | Sequence[str]) -> dict:
    """Run one subcommand (its text form, without ``--model``) against an in-memory model."""
    argv = shlex.split(query) if isinstance(query, str) else list(query)
    args = build_parser().parse_args(argv)
    return _dispatch(model, args)


def format_result(result: dict, output: str = "json") -> str:
    if output == "json":
        return json.dumps(result, indent=2, ensure_ascii=False)
    lines = []

    def walk(prefix, x):
        if isinstance(x, dict) and x:
            for k, v in x.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(x, list) and x and isinstance(x[0], (dict, list)):
            for i, v in enumerate(x):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}\t{json.dumps(x, ensure_ascii=False)}")

    walk("", result)
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if not args.model:
            raise UsageError("--model is required")
        try:
            model = model_io.load_model(args.model)
        except OSError as exc:
            raise UsageError(f"cannot read {args.model}: {exc.strerror}") from exc
        result = _dispatch(model, args)
    except CausalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # anything unexpected is our bug, not the user's
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(format_result(result, args.output))
    return 0


if __name__ == "__main__":
    sys.exit(main())
