"""JSON model documents and CSV table ingestion.

Every document is an envelope ``{"kind": ..., "version": 1, "payload": {...}}``.
Structural checks run against a JSON Schema first (errors name the offending
path), then the model constructors enforce their own invariants.
"""

from __future__ import annotations

import csv
import io as _io
import json
from typing import Any

import jsonschema
import numpy as np

from .errors import CausalError, SchemaError
from .graph import Dag
from .pom import PomTable
from .scm import CptModel, LinearScm
from .stbn import StbnTemplate, validate_temporal

VERSION = 1
KINDS = ("dag", "linear_scm", "cpt_model", "stbn_template", "pom_table")

_NAME = {"type": "string", "minLength": 1}
_NAMES = {"type": "array", "items": _NAME}
_EDGES = {"type": "array", "items": {"type": "array", "items": _NAME, "minItems": 2, "maxItems": 2}}
_NUMBER_MAP = {"type": "object", "additionalProperties": {"type": "number"}}
_LABEL = {"type": ["string", "integer", "boolean", "number"]}


def _obj(required, **props) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


PAYLOAD_SCHEMAS = {
    "dag": _obj(["nodes", "edges"], nodes=_NAMES, edges=_EDGES),
    "linear_scm": _obj(
        ["nodes", "coefficients"],
        nodes=_NAMES,
        coefficients={"type": "array", "items": _obj(["from", "to", "value"], **{
            "from": _NAME, "to": _NAME, "value": {"type": "number"}})},
        intercepts=_NUMBER_MAP,
        noise_std=_NUMBER_MAP,
        noise_names={"type": "object", "additionalProperties": _NAME},
        fixed=_NUMBER_MAP,
    ),
    "cpt_model": _obj(
        ["nodes", "edges", "domains", "cpts"],
        nodes=_NAMES,
        edges=_EDGES,
        domains={"type": "object", "additionalProperties": {"type": "array", "items": _LABEL}},
        cpts={"type": "object", "additionalProperties": {"type": ["array", "number"]}},
    ),
    "stbn_template": _obj(
        ["variables", "max_lag", "edges"],
        variables=_NAMES,
        max_lag={"type": "integer"},
        edges={"type": "array", "items": {
            "type": "array", "prefixItems": [_NAME, {"type": "integer"}, _NAME],
            "minItems": 3, "maxItems": 3}},
    ),
    "pom_table": _obj(
        ["rows"],
        rows={"type": "array", "items": _obj(
            ["unit", "covariates", "treatment", "outcome"],
            unit={"type": ["string", "integer"]},
            covariates={"type": "array", "items": _LABEL},
            treatment={"type": "integer"},
            outcome={"type": "number"},
        )},
    ),
}

ENVELOPE_SCHEMA = _obj(["kind", "version", "payload"],
                       kind={"enum": list(KINDS)},
                       version={"const": VERSION},
                       payload={"type": "object"})


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _check(instance, schema, prefix=()) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(map(str, e.absolute_path)))
    if not errors:
        return
    err = errors[0]
    where = list(prefix) + list(err.absolute_path)
    if err.validator == "additionalProperties":
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            raise SchemaError(_path(where + [extra[0]]), "unknown field")
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        raise SchemaError(_path(where + missing[:1]), "required field is missing")
    raise SchemaError(_path(where), err.message)


# ---------------------------------------------------------------------------
# Parsing


def parse_model(document: str | dict) -> Any:
    """Validate a model document and build the object it describes."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"not valid JSON: {exc.msg} at line {exc.lineno}") from exc
    _check(document, ENVELOPE_SCHEMA)
    kind = document["kind"]
    payload = document["payload"]
    _check(payload, PAYLOAD_SCHEMAS[kind], ("payload",))
    return _BUILDERS[kind](payload)


def _dag(p) -> Dag:
    return Dag(p["nodes"], [tuple(e) for e in p["edges"]])


def _linear(p) -> LinearScm:
    edges = [(c["from"], c["to"]) for c in p["coefficients"]]
    g = Dag(p["nodes"], edges)
    coeff = {(c["from"], c["to"]): c["value"] for c in p["coefficients"]}
    return LinearScm(g, coeff, p.get("noise_names", {}), p.get("intercepts", {}),
                     p.get("noise_std", {}), p.get("fixed", {}))


def _cpt(p) -> CptModel:
    g = _dag(p)
    cpts = {}
    for v, table in p["cpts"].items():
        try:
            cpts[v] = np.array(table, dtype=float)
        except ValueError as exc:
            raise SchemaError(f"$.payload.cpts.{v}", "table is ragged or non-numeric") from exc
    return CptModel(g, p["domains"], cpts)


def _stbn(p) -> StbnTemplate:
    return validate_temporal(p["variables"], p["max_lag"], [tuple(e) for e in p["edges"]])


def _pom(p) -> PomTable:
    return PomTable.from_rows(
        (r["unit"], r["covariates"], r["treatment"], r["outcome"]) for r in p["rows"]
    )


_BUILDERS = {"dag": _dag, "linear_scm": _linear, "cpt_model": _cpt,
             "stbn_template": _stbn, "pom_table": _pom}


# ---------------------------------------------------------------------------
# Serialization


_CLASSES = (("dag", Dag), ("linear_scm", LinearScm), ("cpt_model", CptModel),
            ("stbn_template", StbnTemplate), ("pom_table", PomTable))


def kind_of(model) -> str:
    for kind, cls in _CLASSES:
        if isinstance(model, cls):
            return kind
    raise TypeError(f"cannot serialize {type(model).__name__}")


def kind_of_type(cls) -> str:
    return dict((c, k) for k, c in _CLASSES)[cls]


def _label(x):
    return x.item() if isinstance(x, np.generic) else x


def to_document(model) -> dict:
    kind = kind_of(model)
    if kind == "dag":
        payload = {"nodes": list(model.nodes), "edges": [list(e) for e in model.sorted_edges()]}
    elif kind == "linear_scm":
        g = model.graph
        payload = {
            "nodes": list(g.nodes),
            "coefficients": [{"from": a, "to": b, "value": model.coeff[(a, b)]}
                             for a, b in g.sorted_edges()],
            "intercepts": dict(model.intercept),
            "noise_std": dict(model.noise_std),
            "noise_names": dict(model.noise_name),
            "fixed": dict(model.fixed),
        }
    elif kind == "cpt_model":
        payload = {
            "nodes": list(model.nodes),
            "edges": [list(e) for e in model.graph.sorted_edges()],
            "domains": {v: [_label(x) for x in model.domain[v]] for v in model.nodes},
            "cpts": {v: model.cpt[v].tolist() for v in model.nodes},
        }
    elif kind == "stbn_template":
        payload = {"variables": list(model.variables), "max_lag": model.max_lag,
                   "edges": [list(e) for e in model.lagged_edges]}
    else:
        payload = {"rows": [
            {"unit": u, "covariates": [_label(x) for x in x_row], "treatment": t, "outcome": y}
            for u, x_row, t, y in zip(model.units, model.covariates, model.treatment, model.outcome)
        ]}
    return {"kind": kind, "version": VERSION, "payload": payload}


def serialize_model(model) -> str:
    return json.dumps(to_document(model), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# CSV


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_pom_csv(text: str) -> PomTable:
    """Parse a table with header ``unit,treatment,outcome,x_1,...,x_k``."""
    reader = csv.reader(_io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CausalError("CSV input is empty") from None
    k = len(header) - 3
    expected = ["unit", "treatment", "outcome"] + [f"x_{i}" for i in range(1, k + 1)]
    if k < 0 or header != expected:
        raise SchemaError("header", f"expected {','.join(expected[:3])},x_1..x_k; got {','.join(header)}")
    rows = []
    for line, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise SchemaError(f"line {line}", f"expected {len(header)} fields, got {len(rec)}")
        t = _scalar(rec[1].strip())
        y = _scalar(rec[2].strip())
        if not isinstance(y, (int, float)):
            raise SchemaError(f"line {line}.outcome", f"not a number: {rec[2]!r}")
        rows.append((_scalar(rec[0].strip()), [_scalar(x.strip()) for x in rec[3:]], t, y))
    return PomTable.from_rows(rows)


def read_columns_csv(text: str) -> dict[str, list]:
    """Generic numeric CSV: header row of column names, then rows."""
    reader = csv.DictReader(_io.StringIO(text))
    cols: dict[str, list] = {name.strip(): [] for name in reader.fieldnames or []}
    for row in reader:
        for k, v in row.items():
            try:
                cols[k.strip()].append(float(v))
            except (TypeError, ValueError):
                raise SchemaError(f"column {k}", f"not a number: {v!r}") from None
    return cols


def load_model(path: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.lower().endswith(".csv"):
        return read_pom_csv(text)
    return parse_model(text)
