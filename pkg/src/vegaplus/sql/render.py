"""Deterministic SQL text generation.

Number literals always render in a float form (``10.0``, ``1e+20``) so the
engine keeps REAL arithmetic; the shortest round-trip representation doubles
as the canonical literal format for cache keys. COUNT is cast to REAL so
derived columns never fall back to integer division.
"""
from __future__ import annotations

import math

from ..errors import UnsupportedOnDialect
from .dialect import SqlDialect
from .tree import (
    GroupBy,
    Limit,
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


def format_sql_number(v: float) -> str:
    if math.isnan(v):
        return "NULL"
    if math.isinf(v):
        return "9e999" if v > 0 else "-9e999"
    r = repr(float(v))
    return r


def format_sql_string(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def render_expr(e: SqlExpr, d: SqlDialect) -> str:
    if isinstance(e, SCol):
        return d.quote_ident(e.name)
    if isinstance(e, SLit):
        if e.value is None:
            return "NULL"
        if isinstance(e.value, bool):
            return "1.0" if e.value else "0.0"
        if isinstance(e.value, float):
            return format_sql_number(e.value)
        return format_sql_string(str(e.value))
    if isinstance(e, SUnary):
        if e.op == "NOT":
            return f"(NOT {render_expr(e.operand, d)})"
        return f"(-{render_expr(e.operand, d)})"
    if isinstance(e, SNotNull):
        return f"({render_expr(e.operand, d)} IS NOT NULL)"
    if isinstance(e, SBin):
        return f"({render_expr(e.left, d)} {e.op} {render_expr(e.right, d)})"
    if isinstance(e, SMod):
        return d.mod_template.format(a=render_expr(e.left, d), b=render_expr(e.right, d))
    if isinstance(e, SFunc):
        args = ", ".join(render_expr(a, d) for a in e.args)
        return f"{e.name}({args})"
    if isinstance(e, SRegex):
        return d.regex_template.format(value=render_expr(e.value, d), pattern=render_expr(e.pattern, d))
    raise TypeError(f"not a SQL expression: {e!r}")


def _render_agg(alias: str, op: str, field: str | None, d: SqlDialect) -> str:
    if op == "count":
        return f"{d.float_cast_template.format(x='COUNT(*)')} AS {d.quote_ident(alias)}"
    fn = {"sum": "SUM", "mean": "AVG", "min": "MIN", "max": "MAX"}[op]
    return f"{fn}({d.quote_ident(field)}) AS {d.quote_ident(alias)}"


def _order_clause(keys: tuple, d: SqlDialect) -> str:
    parts = []
    for fld, direction in keys:
        dir_sql = "ASC" if direction == "asc" else "DESC"
        parts.append(f"{d.quote_ident(fld)} {dir_sql} {d.nulls_last}".rstrip())
    return ", ".join(parts)


class _Renderer:
    def __init__(self, dialect: SqlDialect):
        self.d = dialect
        self.counter = 0

    def sub(self, q: SqlQuery) -> str:
        self.counter += 1
        alias = f"t{self.counter}"
        return f"({self.render(q)}) AS {alias}"

    def render(self, q: SqlQuery) -> str:
        d = self.d
        if isinstance(q, Scan):
            if q.columns is None:
                return f"SELECT * FROM {d.quote_ident(q.table)}"
            cols = ", ".join(d.quote_ident(c) for c in q.columns)
            return f"SELECT {cols} FROM {d.quote_ident(q.table)}"
        if isinstance(q, Select):
            return f"SELECT * FROM {self.sub(q.input)} WHERE {render_expr(q.predicate, d)}"
        if isinstance(q, Project):
            items = ", ".join(f"{render_expr(e, d)} AS {d.quote_ident(alias)}" for alias, _t, e in q.exprs)
            return f"SELECT {items} FROM {self.sub(q.input)}"
        if isinstance(q, GroupBy):
            items = [d.quote_ident(k) for k in q.keys]
            items += [_render_agg(alias, op, fld, d) for alias, op, fld in q.aggs]
            sql = f"SELECT {', '.join(items)} FROM {self.sub(q.input)}"
            if q.keys:
                sql += " GROUP BY " + ", ".join(d.quote_ident(k) for k in q.keys)
            return sql
        if isinstance(q, Window):
            if not d.supports_windows:
                raise UnsupportedOnDialect(f"dialect {d.name!r} lacks window functions")
            over = []
            if q.partition:
                over.append("PARTITION BY " + ", ".join(d.quote_ident(k) for k in q.partition))
            if q.order:
                over.append("ORDER BY " + _order_clause(q.order, d))
            over.append("ROWS BETWEEN UNBOUNDED PRECEDING AND CURRENT ROW")
            # COALESCE: a frame with no non-null contribution is an empty
            # running sum (0), matching the interpreter
            win = (
                f"COALESCE(SUM({d.quote_ident(q.value_field)}) OVER ({' '.join(over)}), 0.0) "
                f"AS {d.quote_ident(q.alias)}"
            )
            return f"SELECT *, {win} FROM {self.sub(q.input)}"
        if isinstance(q, OrderBy):
            return f"SELECT * FROM {self.sub(q.input)} ORDER BY {_order_clause(q.keys, d)}"
        if isinstance(q, Limit):
            return f"SELECT * FROM {self.sub(q.input)} LIMIT {int(q.n)}"
        raise TypeError(f"not a query node: {q!r}")


def render_sql(q: SqlQuery, dialect: SqlDialect) -> str:
    """Render a query tree to deterministic SQL text."""
    _check_windows(q, dialect)
    return _Renderer(dialect).render(q)


def _check_windows(q: SqlQuery, dialect: SqlDialect):
    node = q
    while node is not None:
        if isinstance(node, Window) and not dialect.supports_windows:
            raise UnsupportedOnDialect(f"dialect {dialect.name!r} lacks window functions")
        node = None if isinstance(node, Scan) else node.input


def result_schema(q: SqlQuery) -> list[tuple[str, str]]:
    return list(output_schema(q))
