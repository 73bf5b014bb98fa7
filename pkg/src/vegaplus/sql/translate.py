"""Translation of dataflow operators into relational query trees.

Signal references are resolved to literal values at translation time
(inlined literals keep cache keys canonical over full SQL text). The bin
translation shares the nicing rule with the interpreter so both routes use
identical (start, step) parameters; the binned-field null filter is explicit
so the two sides drop the same rows.
"""
from __future__ import annotations

from .. import exprs
from ..errors import EvalError, UnsupportedOnDialect
from ..specmodel import SignalParam
from ..transforms import nice_bin_params
from .dialect import SqlDialect
from .tree import (
    GroupBy,
    OrderBy,
    Project,
    Scan,
    SBin,
    SCol,
    Select,
    SFunc,
    SLit,
    SMod,
    SNotNull,
    SqlExpr,
    SqlQuery,
    SRegex,
    SUnary,
    Window,
    output_schema,
)

_CMP = {"==": "=", "!=": "<>", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def expr_to_sql(e: exprs.Expr, signals: dict) -> SqlExpr:
    """Lower a user expression, inlining current signal values as literals."""
    if isinstance(e, exprs.Literal):
        if isinstance(e.value, bool):
            return SLit(e.value, "boolean")
        if isinstance(e.value, float):
            return SLit(e.value, "number")
        return SLit(e.value, "string")
    if isinstance(e, exprs.FieldRef):
        return SCol(e.name)
    if isinstance(e, exprs.SignalRef):
        if e.name not in signals:
            raise EvalError(f"signal {e.name!r} has no value")
        v = signals[e.name]
        if isinstance(v, bool):
            return SLit(v, "boolean")
        if isinstance(v, (int, float)):
            return SLit(float(v), "number")
        if v is None:
            return SLit(None, "number")
        return SLit(str(v), "string")
    if isinstance(e, exprs.Unary):
        if e.op == "!":
            return SUnary("NOT", expr_to_sql(e.operand, signals))
        return SUnary("-", expr_to_sql(e.operand, signals))
    if isinstance(e, exprs.Binary):
        left = expr_to_sql(e.left, signals)
        right = expr_to_sql(e.right, signals)
        if e.op == "&&":
            return SBin("AND", left, right)
        if e.op == "||":
            return SBin("OR", left, right)
        if e.op in _CMP:
            return SBin(_CMP[e.op], left, right)
        if e.op == "%":
            return SMod(left, right)
        return SBin(e.op, left, right)
    if isinstance(e, exprs.Call):
        if e.func == "test":
            return SRegex(
                value=expr_to_sql(e.args[1], signals),
                pattern=expr_to_sql(e.args[0], signals),
            )
        return SFunc(e.func, tuple(expr_to_sql(a, signals) for a in e.args))
    raise TypeError(f"not an expression: {e!r}")


def _passthrough(child: SqlQuery) -> list[tuple[str, str, SqlExpr]]:
    return [(name, t, SCol(name)) for name, t in output_schema(child)]


def _resolve(value, signals: dict):
    if isinstance(value, SignalParam):
        if value.name not in signals:
            raise EvalError(f"signal {value.name!r} has no value")
        return signals[value.name]
    return value


def translate_operator(kind: str, params: dict, child: SqlQuery, signals: dict, dialect: SqlDialect) -> SqlQuery:
    """One operator -> one relational node (bin adds its null filter)."""
    if kind == "filter":
        return Select(expr_to_sql(params["expr"], signals), child)
    if kind == "formula":
        out = params["as"]
        etype = params.get("expr_type", "number")
        expr = expr_to_sql(params["expr"], signals)
        items = [it for it in _passthrough(child)]
        for i, (alias, _t, _e) in enumerate(items):
            if alias == out:
                items[i] = (out, etype, expr)
                break
        else:
            items.append((out, etype, expr))
        return Project(tuple(items), child)
    if kind == "project":
        types = dict(output_schema(child))
        return Project(tuple((f, types[f], SCol(f)) for f in params["fields"]), child)
    if kind == "extent":
        f = params["field"]
        return GroupBy((), (("min", "min", f), ("max", "max", f)), child)
    if kind == "bin":
        f = params["field"]
        extent = _resolve(params["extent"], signals)
        maxbins = _resolve(params["maxbins"], signals)
        if not isinstance(extent, (list, tuple)) or len(extent) != 2:
            raise EvalError(f"bin extent must be a [lo, hi] pair, got {extent!r}")
        if maxbins is None or isinstance(maxbins, (str, bool)):
            raise EvalError(f"maxbins must be numeric, got {maxbins!r}")
        binned = nice_bin_params(extent[0], extent[1], float(maxbins))
        base = [(n, t, SCol(n)) for n, t in output_schema(child) if n not in ("bin0", "bin1")]
        if binned is None:
            # Unusable extent: empty result with the right shape.
            empty = Select(SLit(False, "boolean"), child)
            items = base + [("bin0", "number", SLit(None)), ("bin1", "number", SLit(None))]
            return Project(tuple(items), empty)
        start, step = binned
        filtered = Select(SNotNull(SCol(f)), child)
        bin0: SqlExpr = SBin(
            "+",
            SLit(start),
            SBin("*", SLit(step), SFunc("floor", (SBin("/", SBin("-", SCol(f), SLit(start)), SLit(step)),))),
        )
        items = base + [("bin0", "number", bin0), ("bin1", "number", SBin("+", bin0, SLit(step)))]
        return Project(tuple(items), filtered)
    if kind == "aggregate":
        aggs = tuple((name, op, fld) for op, fld, name in params["ops"])
        return GroupBy(tuple(params["groupby"]), aggs, child)
    if kind == "collect":
        keys = tuple((f, "asc" if o == "ascending" else "desc") for f, o in params["sort"])
        return OrderBy(keys, child)
    if kind == "stack":
        if not dialect.supports_windows:
            raise UnsupportedOnDialect(f"dialect {dialect.name!r} cannot run stack (no window functions)")
        groupby = tuple(params["groupby"])
        sf, so = params["sort"]
        order = [(sf, "asc" if so == "ascending" else "desc")]
        named = set(groupby) | {sf}
        child_cols = [n for n, _t in output_schema(child)]
        for n in child_cols:
            if n not in named:
                order.append((n, "asc"))  # deterministic tiebreak mirrored by the interpreter
        alias = "y1"
        while alias in child_cols:  # re-stacking: keep the running sum unambiguous
            alias = "_" + alias
        win = Window(groupby, tuple(order), params["field"], alias, child)
        items = [(n, t, SCol(n)) for n, t in output_schema(child) if n not in ("y0", "y1")]
        items.append(("y0", "number", SBin("-", SCol(alias), SCol(params["field"]))))
        items.append(("y1", "number", SCol(alias)))
        return Project(tuple(items), win)
    raise EvalError(f"operator kind {kind!r} has no SQL translation")


def merge_region(nodes: list, base_table: str, base_schema: list[tuple[str, str]], signals: dict, dialect: SqlDialect) -> SqlQuery:
    """Compose a contiguous row-stream chain into one nested query.

    ``nodes`` are OperatorNode-like objects (``kind``/``params``) ordered
    from the scan outward; passing an empty chain yields the bare scan.
    """
    q: SqlQuery = Scan(base_table, tuple(base_schema))
    for node in nodes:
        if node.kind == "extent":
            raise ValueError("extent is a side query, not part of a merged data chain")
        q = translate_operator(node.kind, node.params, q, signals, dialect)
    return q
