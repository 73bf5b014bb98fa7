"""Parsing and validation of the declarative visualization specification.

The accepted format is a strict Vega subset documented in
``docs/spec-format.md``. Unknown top-level keys are preserved but ignored;
unknown transform kinds are a hard error. Every validation failure raises
:class:`SpecError` carrying the JSON path of the offending element.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import exprs
from .errors import ExprSyntaxError, ExprTypeError, SpecError
from .exprs import Expr

TRANSFORM_KINDS = ("filter", "formula", "extent", "bin", "aggregate", "collect", "stack", "project")
AGG_OPS = ("count", "sum", "mean", "min", "max")
SPEC_VERSION = 1

# Transform kinds that replace the row stream; extent only observes it and
# publishes a signal, so the next transform keeps reading extent's input.
ROW_STREAM_KINDS = ("filter", "formula", "bin", "aggregate", "collect", "stack", "project")


@dataclass(frozen=True)
class SliderBind:
    min: float
    max: float
    step: float

    kind = "slider"


@dataclass(frozen=True)
class SelectBind:
    options: tuple

    kind = "select"


@dataclass(frozen=True)
class RadioBind:
    options: tuple

    kind = "radio"


@dataclass(frozen=True)
class TextRegexBind:
    kind = "text"


@dataclass(frozen=True)
class SignalDef:
    name: str
    value: object
    bind: object | None = None

    def value_type(self) -> str:
        if isinstance(self.value, bool):
            return "boolean"
        if isinstance(self.value, (int, float)):
            return "number"
        return "string"

    def in_domain(self, value) -> bool:
        if isinstance(value, bool):
            ok_type = self.value_type() == "boolean"
        elif isinstance(value, (int, float)):
            ok_type = self.value_type() == "number"
        elif isinstance(value, str):
            ok_type = self.value_type() == "string"
        else:
            return False
        if not ok_type:
            return False
        if isinstance(self.bind, SliderBind):
            return self.bind.min <= float(value) <= self.bind.max
        if isinstance(self.bind, (SelectBind, RadioBind)):
            return value in self.bind.options
        return True


@dataclass(frozen=True)
class SignalParam:
    """A transform parameter slot referencing a signal by name."""

    name: str


@dataclass
class TransformDef:
    kind: str
    params: dict
    path: str = "$"

    def signal_refs(self) -> set[str]:
        out: set[str] = set()
        for v in self.params.values():
            if isinstance(v, SignalParam):
                out.add(v.name)
            elif isinstance(
                v, (exprs.Literal, exprs.FieldRef, exprs.SignalRef, exprs.Unary, exprs.Binary, exprs.Call)
            ):
                out |= exprs.signal_refs(v)
        return out


@dataclass
class DataSource:
    """One entry of the ``data`` array: a base origin or a derived dataset,
    optionally followed by a transform pipeline."""

    name: str
    table: str | None = None
    values: list | None = None
    file: str | None = None
    source: str | None = None
    transforms: list[TransformDef] = field(default_factory=list)
    schema: list[tuple[str, str]] | None = None  # declared or inferred base schema
    path: str = "$"

    @property
    def is_derived(self) -> bool:
        return self.source is not None

    def origin(self) -> str:
        if self.table is not None:
            return "table"
        if self.values is not None:
            return "inline"
        if self.file is not None:
            return "file"
        return "derived"


@dataclass(frozen=True)
class MarkStub:
    name: str
    source: str
    encoding: dict


@dataclass
class VizSpec:
    datasets: list[DataSource]
    signals: list[SignalDef]
    marks: list[MarkStub]
    extra: dict = field(default_factory=dict)
    # name -> schema after the full pipeline, and per-stage schemas
    output_schemas: dict = field(default_factory=dict)
    stage_schemas: dict = field(default_factory=dict)
    signal_types: dict = field(default_factory=dict)

    def dataset(self, name: str) -> DataSource:
        for d in self.datasets:
            if d.name == name:
                return d
        raise KeyError(name)

    def signal(self, name: str) -> SignalDef:
        for s in self.signals:
            if s.name == name:
                return s
        raise KeyError(name)

    def initial_signals(self) -> dict:
        out = {}
        for s in self.signals:
            v = s.value
            out[s.name] = float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v
        return out


# ---------------------------------------------------------------------------
# Parsing helpers


_IDENT_OK = __import__("re").compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _require(cond: bool, msg: str, path: str):
    if not cond:
        raise SpecError(msg, path)


def _ident(value, what: str, path: str) -> str:
    _require(isinstance(value, str) and bool(_IDENT_OK.match(value)), f"{what} must be an identifier, got {value!r}", path)
    return value


def _number(value, what: str, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"{what} must be a number", path)
    return float(value)


def _parse_expr_at(text, path: str) -> Expr:
    _require(isinstance(text, str), "expected an expression string", path)
    try:
        return exprs.parse_expr(text)
    except ExprSyntaxError as exc:
        raise SpecError(str(exc), path) from exc


def _scalar_or_signal(value, what: str, path: str):
    if isinstance(value, dict):
        _require(set(value) == {"signal"}, f"{what}: expected a literal or {{\"signal\": name}}", path)
        return SignalParam(_ident(value["signal"], f"{what} signal", path))
    return value


def infer_inline_schema(values: list, path: str = "$") -> tuple[list[tuple[str, str]], list[tuple]]:
    """Infer a schema from inline row objects and return (schema, rows)."""
    _require(isinstance(values, list) and len(values) > 0, "inline values must be a nonempty array", path)
    names: list[str] = []
    for i, row in enumerate(values):
        _require(isinstance(row, dict), "inline rows must be objects", f"{path}[{i}]")
        for k in row:
            if k not in names:
                names.append(k)
    types: dict[str, str] = {}
    for name in names:
        t = None
        for row in values:
            v = row.get(name)
            if v is None:
                continue
            vt = "boolean" if isinstance(v, bool) else "number" if isinstance(v, (int, float)) else "string"
            if t is None:
                t = vt
            elif t != vt:
                raise SpecError(f"field {name!r} mixes {t} and {vt} values", path)
        types[name] = t or "string"
    schema = [(n, types[n]) for n in names]
    rows = [tuple(row.get(n) for n in names) for row in values]
    return schema, rows


# ---------------------------------------------------------------------------
# Transform parsing (kind-specific parameter validation)


def _parse_sort(obj, path: str) -> tuple[list[str], list[str]]:
    _require(isinstance(obj, dict) and "field" in obj, "sort must be {field, order?}", path)
    fields = obj["field"] if isinstance(obj["field"], list) else [obj["field"]]
    fields = [_ident(f, "sort field", path) for f in fields]
    orders = obj.get("order", ["ascending"] * len(fields))
    if isinstance(orders, str):
        orders = [orders]
    _require(len(orders) == len(fields), "sort order list must match field list", path)
    for o in orders:
        _require(o in ("ascending", "descending"), f"sort order must be ascending|descending, got {o!r}", path)
    return fields, orders


def _parse_transform(obj, path: str) -> TransformDef:
    _require(isinstance(obj, dict), "transform must be an object", path)
    kind = obj.get("type")
    _require(isinstance(kind, str), "transform needs a 'type'", path)
    if kind not in TRANSFORM_KINDS:
        raise SpecError(f"unknown transform kind {kind!r}", path)
    p: dict = {}
    if kind == "filter":
        p["expr"] = _parse_expr_at(obj.get("expr"), f"{path}.expr")
    elif kind == "formula":
        p["expr"] = _parse_expr_at(obj.get("expr"), f"{path}.expr")
        p["as"] = _ident(obj.get("as"), "formula output name", f"{path}.as")
    elif kind == "extent":
        p["field"] = _ident(obj.get("field"), "extent field", f"{path}.field")
        p["signal"] = _ident(obj.get("signal"), "extent output signal", f"{path}.signal")
    elif kind == "bin":
        p["field"] = _ident(obj.get("field"), "bin field", f"{path}.field")
        extent = obj.get("extent")
        _require(extent is not None, "bin needs an extent (signal reference or [lo, hi])", f"{path}.extent")
        if isinstance(extent, dict):
            p["extent"] = _scalar_or_signal(extent, "bin extent", f"{path}.extent")
        else:
            _require(
                isinstance(extent, list) and len(extent) == 2,
                "bin extent literal must be [lo, hi]",
                f"{path}.extent",
            )
            lo = _number(extent[0], "extent lo", f"{path}.extent[0]")
            hi = _number(extent[1], "extent hi", f"{path}.extent[1]")
            p["extent"] = (lo, hi)
        maxbins = _scalar_or_signal(obj.get("maxbins", 10), "maxbins", f"{path}.maxbins")
        if not isinstance(maxbins, SignalParam):
            maxbins = _number(maxbins, "maxbins", f"{path}.maxbins")
            _require(maxbins >= 1, "maxbins must be >= 1", f"{path}.maxbins")
        p["maxbins"] = maxbins
    elif kind == "aggregate":
        groupby = obj.get("groupby", [])
        _require(isinstance(groupby, list), "groupby must be a list", f"{path}.groupby")
        p["groupby"] = [_ident(g, "groupby field", f"{path}.groupby") for g in groupby]
        ops = obj.get("ops")
        _require(isinstance(ops, list) and len(ops) >= 1, "aggregate needs >= 1 ops", f"{path}.ops")
        fields = obj.get("fields", [None] * len(ops))
        names = obj.get("as", [None] * len(ops))
        _require(len(fields) == len(ops) and len(names) == len(ops), "ops/fields/as lengths must match", path)
        triples = []
        for i, op in enumerate(ops):
            _require(op in AGG_OPS, f"unknown aggregate op {op!r}", f"{path}.ops[{i}]")
            f = fields[i]
            if op == "count":
                _require(f is None, "count takes no field", f"{path}.fields[{i}]")
            else:
                f = _ident(f, f"{op} field", f"{path}.fields[{i}]")
            out = names[i]
            if out is None:
                out = op if f is None else f"{op}_{f}"
            triples.append((op, f, _ident(out, "aggregate output name", f"{path}.as[{i}]")))
        p["ops"] = triples
    elif kind == "collect":
        fields, orders = _parse_sort(obj.get("sort"), f"{path}.sort")
        p["sort"] = list(zip(fields, orders))
    elif kind == "stack":
        groupby = obj.get("groupby", [])
        _require(isinstance(groupby, list), "groupby must be a list", f"{path}.groupby")
        p["groupby"] = [_ident(g, "groupby field", f"{path}.groupby") for g in groupby]
        fields, orders = _parse_sort(obj.get("sort"), f"{path}.sort")
        _require(len(fields) == 1, "stack sort takes a single key", f"{path}.sort")
        p["sort"] = (fields[0], orders[0])
        p["field"] = _ident(obj.get("field"), "stack value field", f"{path}.field")
    elif kind == "project":
        fields = obj.get("fields")
        _require(isinstance(fields, list) and len(fields) >= 1, "project needs a nonempty field list", f"{path}.fields")
        names = [_ident(f, "project field", f"{path}.fields") for f in fields]
        _require(len(set(names)) == len(names), "project fields must be unique", f"{path}.fields")
        p["fields"] = names
    return TransformDef(kind=kind, params=p, path=path)


# ---------------------------------------------------------------------------
# Schema propagation + type checking


def transform_output_schema(
    t: TransformDef,
    schema: list[tuple[str, str]],
    signal_types: dict[str, str],
) -> list[tuple[str, str]]:
    """Schema after one transform; raises SpecError on a type violation."""
    fields = dict(schema)

    def need_numeric(name: str, what: str):
        if name not in fields:
            raise SpecError(f"{what} references unknown field {name!r}", t.path)
        if fields[name] != "number":
            raise SpecError(f"{what} field {name!r} must be a number, got {fields[name]}", t.path)

    try:
        if t.kind == "filter":
            et = exprs.check_expr(t.params["expr"], fields, signal_types)
            if et != "boolean":
                raise SpecError(f"filter expression must be boolean, got {et}", t.path)
            return list(schema)
        if t.kind == "formula":
            et = exprs.check_expr(t.params["expr"], fields, signal_types)
            t.params["expr_type"] = et
            out = t.params["as"]
            if out in fields:
                return [(n, et if n == out else ty) for n, ty in schema]
            return list(schema) + [(out, et)]
        if t.kind == "extent":
            need_numeric(t.params["field"], "extent")
            return list(schema)  # pass-through branch; min/max go to the signal
        if t.kind == "bin":
            need_numeric(t.params["field"], "bin")
            ext = t.params["extent"]
            if isinstance(ext, SignalParam):
                st = signal_types.get(ext.name)
                if st is None:
                    raise SpecError(f"bin extent references unknown signal {ext.name!r}", t.path)
                if st not in ("extent", "number_pair"):
                    raise SpecError(f"bin extent signal {ext.name!r} must be an extent pair", t.path)
            mb = t.params["maxbins"]
            if isinstance(mb, SignalParam):
                st = signal_types.get(mb.name)
                if st is None:
                    raise SpecError(f"maxbins references unknown signal {mb.name!r}", t.path)
                if st != "number":
                    raise SpecError(f"maxbins signal {mb.name!r} must be a number", t.path)
            out = [(n, ty) for n, ty in schema if n not in ("bin0", "bin1")]
            return out + [("bin0", "number"), ("bin1", "number")]
        if t.kind == "aggregate":
            for g in t.params["groupby"]:
                if g not in fields:
                    raise SpecError(f"groupby references unknown field {g!r}", t.path)
            out = [(g, fields[g]) for g in t.params["groupby"]]
            for op, f, name in t.params["ops"]:
                if op == "count":
                    out.append((name, "number"))
                    continue
                if f not in fields:
                    raise SpecError(f"aggregate references unknown field {f!r}", t.path)
                if op in ("sum", "mean"):
                    if fields[f] != "number":
                        raise SpecError(f"{op} needs a numeric field, {f!r} is {fields[f]}", t.path)
                    out.append((name, "number"))
                else:  # min/max keep the input type
                    if fields[f] == "boolean":
                        raise SpecError(f"{op} does not apply to boolean field {f!r}", t.path)
                    out.append((name, fields[f]))
            names = [n for n, _ in out]
            if len(set(names)) != len(names):
                raise SpecError(f"aggregate output names collide: {names}", t.path)
            return out
        if t.kind == "collect":
            for f, _ in t.params["sort"]:
                if f not in fields:
                    raise SpecError(f"sort references unknown field {f!r}", t.path)
            return list(schema)
        if t.kind == "stack":
            for g in t.params["groupby"]:
                if g not in fields:
                    raise SpecError(f"groupby references unknown field {g!r}", t.path)
            sf, _ = t.params["sort"]
            if sf not in fields:
                raise SpecError(f"stack sort references unknown field {sf!r}", t.path)
            need_numeric(t.params["field"], "stack value")
            out = [(n, ty) for n, ty in schema if n not in ("y0", "y1")]
            return out + [("y0", "number"), ("y1", "number")]
        if t.kind == "project":
            for f in t.params["fields"]:
                if f not in fields:
                    raise SpecError(f"project references unknown field {f!r}", t.path)
            return [(f, fields[f]) for f in t.params["fields"]]
    except ExprTypeError as exc:
        raise SpecError(str(exc), t.path) from exc
    raise SpecError(f"unknown transform kind {t.kind!r}", t.path)


# ---------------------------------------------------------------------------
# Top-level parse


def parse_spec(json_text: str, table_schemas: dict[str, list[tuple[str, str]]] | None = None) -> VizSpec:
    """Parse and validate a spec document.

    ``table_schemas`` supplies schemas for ``table``/``file`` origins that do
    not declare one inline (the service passes schemas of ingested tables).
    """
    table_schemas = table_schemas or {}
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", "$") from exc
    _require(isinstance(doc, dict), "spec must be a JSON object", "$")
    _require(doc.get("vegaplus_version") == SPEC_VERSION, f"spec must declare \"vegaplus_version\": {SPEC_VERSION}", "$.vegaplus_version")

    known = {"vegaplus_version", "data", "signals", "marks"}
    extra = {k: v for k, v in doc.items() if k not in known}

    # Signals first: transforms reference them.
    signals: list[SignalDef] = []
    signal_types: dict[str, str] = {}
    for i, s in enumerate(doc.get("signals", [])):
        path = f"$.signals[{i}]"
        _require(isinstance(s, dict), "signal must be an object", path)
        name = _ident(s.get("name"), "signal name", f"{path}.name")
        _require(name not in signal_types, f"duplicate signal name {name!r}", f"{path}.name")
        value = s.get("value")
        _require(
            value is None or isinstance(value, (int, float, str, bool)),
            "signal initial value must be a scalar",
            f"{path}.value",
        )
        bind = _parse_bind(s.get("bind"), f"{path}.bind")
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = float(value)
        sd = SignalDef(name=name, value=value, bind=bind)
        if bind is not None:
            _require(sd.in_domain(value), f"initial value {value!r} outside bind domain", f"{path}.value")
        if isinstance(bind, TextRegexBind):
            _require(isinstance(value, str), "text-bound signal needs a string initial value", f"{path}.value")
        signals.append(sd)
        signal_types[name] = sd.value_type()

    data = doc.get("data", [])
    _require(isinstance(data, list) and len(data) > 0, "spec needs a nonempty 'data' array", "$.data")

    # extent-published signals are visible document-wide (forward references
    # included); a reference that induces a cycle is caught by the graph's
    # acyclicity check, not here
    for i, d in enumerate(data):
        if not isinstance(d, dict):
            continue
        for j, t in enumerate(d.get("transform", []) or []):
            if isinstance(t, dict) and t.get("type") == "extent":
                out_sig = t.get("signal")
                if isinstance(out_sig, str) and _IDENT_OK.match(out_sig):
                    path = f"$.data[{i}].transform[{j}].signal"
                    _require(out_sig not in signal_types, f"extent output signal {out_sig!r} collides with an existing signal", path)
                    signal_types[out_sig] = "extent"

    datasets: list[DataSource] = []
    seen: dict[str, DataSource] = {}
    output_schemas: dict[str, list[tuple[str, str]]] = {}
    stage_schemas: dict[str, list[list[tuple[str, str]]]] = {}

    for i, d in enumerate(data):
        path = f"$.data[{i}]"
        _require(isinstance(d, dict), "data entry must be an object", path)
        name = _ident(d.get("name"), "dataset name", f"{path}.name")
        _require(name not in seen, f"duplicate dataset name {name!r}", f"{path}.name")
        origins = [k for k in ("table", "values", "file", "source") if k in d]
        _require(len(origins) == 1, "data entry needs exactly one of table|values|file|source", path)

        ds = DataSource(name=name, path=path)
        base_schema: list[tuple[str, str]]
        if "values" in d:
            schema, _rows = infer_inline_schema(d["values"], f"{path}.values")
            ds.values = d["values"]
            ds.schema = schema
            base_schema = schema
        elif "source" in d:
            src = d["source"]
            _require(src in seen, f"source dataset {src!r} is not declared earlier", f"{path}.source")
            ds.source = src
            base_schema = output_schemas[src]
        else:
            key = "table" if "table" in d else "file"
            ref = d[key]
            _require(isinstance(ref, str) and ref, f"{key} reference must be a nonempty string", f"{path}.{key}")
            setattr(ds, key, ref)
            declared = d.get("schema")
            if declared is not None:
                ds.schema = _parse_declared_schema(declared, f"{path}.schema")
            elif ref in table_schemas:
                ds.schema = list(table_schemas[ref])
            elif name in table_schemas:
                ds.schema = list(table_schemas[name])
            else:
                raise SpecError(
                    f"no schema known for {key} source {ref!r}; declare one or register the table first",
                    path,
                )
            base_schema = ds.schema

        stages = [list(base_schema)]
        schema = list(base_schema)
        for j, t in enumerate(d.get("transform", [])):
            tpath = f"{path}.transform[{j}]"
            td = _parse_transform(t, tpath)
            for ref in td.signal_refs():
                _require(ref in signal_types, f"unknown signal {ref!r}", tpath)
            schema = transform_output_schema(td, schema, signal_types)
            stages.append(list(schema))
            ds.transforms.append(td)
        datasets.append(ds)
        seen[name] = ds
        output_schemas[name] = schema
        stage_schemas[name] = stages

    marks: list[MarkStub] = []
    for i, m in enumerate(doc.get("marks", [])):
        path = f"$.marks[{i}]"
        _require(isinstance(m, dict), "mark must be an object", path)
        frm = m.get("from")
        _require(isinstance(frm, dict) and "data" in frm, "mark needs from.data", f"{path}.from")
        src = frm["data"]
        _require(src in seen, f"mark references unknown dataset {src!r}", f"{path}.from.data")
        encoding = m.get("encoding", {})
        _require(isinstance(encoding, dict), "encoding must be an object", f"{path}.encoding")
        avail = {n for n, _ in output_schemas[src]}
        for channel, fld in encoding.items():
            _require(isinstance(fld, str), "encoding values are field names", f"{path}.encoding.{channel}")
            _require(fld in avail, f"encoding field {fld!r} not in dataset {src!r}", f"{path}.encoding.{channel}")
        marks.append(MarkStub(name=m.get("name", f"mark_{i}"), source=src, encoding=dict(encoding)))

    return VizSpec(
        datasets=datasets,
        signals=signals,
        marks=marks,
        extra=extra,
        output_schemas=output_schemas,
        stage_schemas=stage_schemas,
        signal_types=signal_types,
    )


def _parse_declared_schema(obj, path: str) -> list[tuple[str, str]]:
    _require(isinstance(obj, dict) and obj, "schema must be a nonempty object of field: type", path)
    out = []
    for name, t in obj.items():
        _ident(name, "field name", path)
        _require(t in ("number", "string", "boolean"), f"unknown type {t!r} for field {name!r}", path)
        out.append((name, t))
    return out


def _parse_bind(obj, path: str):
    if obj is None:
        return None
    _require(isinstance(obj, dict), "bind must be an object", path)
    kind = obj.get("input")
    if kind == "range":
        lo = _number(obj.get("min"), "bind min", f"{path}.min")
        hi = _number(obj.get("max"), "bind max", f"{path}.max")
        step = _number(obj.get("step", 1), "bind step", f"{path}.step")
        _require(lo < hi, "slider requires min < max", path)
        _require(step > 0, "slider requires step > 0", path)
        return SliderBind(lo, hi, step)
    if kind in ("select", "radio"):
        options = obj.get("options")
        _require(isinstance(options, list) and len(options) > 0, f"{kind} needs options", f"{path}.options")
        opts = tuple(float(o) if isinstance(o, (int, float)) and not isinstance(o, bool) else o for o in options)
        return SelectBind(opts) if kind == "select" else RadioBind(opts)
    if kind == "text":
        return TextRegexBind()
    raise SpecError(f"unknown bind input {kind!r}", path)
