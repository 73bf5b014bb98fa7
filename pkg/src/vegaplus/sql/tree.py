"""Relational query tree and SQL-level expressions.

All nodes are frozen dataclasses so rewrites compare structurally and the
fixpoint loop can detect convergence with plain equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class SCol:
    name: str


@dataclass(frozen=True)
class SLit:
    value: object  # float | str | bool | None
    type: str = "number"


@dataclass(frozen=True)
class SUnary:
    op: str  # '-' | 'NOT'
    operand: "SqlExpr"


@dataclass(frozen=True)
class SBin:
    op: str  # + - * / = <> < <= > >= AND OR
    left: "SqlExpr"
    right: "SqlExpr"


@dataclass(frozen=True)
class SMod:
    left: "SqlExpr"
    right: "SqlExpr"


@dataclass(frozen=True)
class SFunc:
    name: str  # abs floor ceil sqrt min max
    args: tuple


@dataclass(frozen=True)
class SRegex:
    value: "SqlExpr"
    pattern: "SqlExpr"


@dataclass(frozen=True)
class SNotNull:
    operand: "SqlExpr"


SqlExpr = Union[SCol, SLit, SUnary, SBin, SMod, SFunc, SRegex, SNotNull]


def expr_columns(e: SqlExpr) -> set[str]:
    if isinstance(e, SCol):
        return {e.name}
    if isinstance(e, SLit):
        return set()
    if isinstance(e, (SUnary, SNotNull)):
        return expr_columns(e.operand)
    if isinstance(e, (SBin, SMod)):
        return expr_columns(e.left) | expr_columns(e.right)
    if isinstance(e, SFunc):
        out: set[str] = set()
        for a in e.args:
            out |= expr_columns(a)
        return out
    if isinstance(e, SRegex):
        return expr_columns(e.value) | expr_columns(e.pattern)
    raise TypeError(f"not a SQL expression: {e!r}")


def rename_columns(e: SqlExpr, mapping: dict[str, str]) -> SqlExpr:
    if isinstance(e, SCol):
        return SCol(mapping.get(e.name, e.name))
    if isinstance(e, SLit):
        return e
    if isinstance(e, SUnary):
        return SUnary(e.op, rename_columns(e.operand, mapping))
    if isinstance(e, SNotNull):
        return SNotNull(rename_columns(e.operand, mapping))
    if isinstance(e, SBin):
        return SBin(e.op, rename_columns(e.left, mapping), rename_columns(e.right, mapping))
    if isinstance(e, SMod):
        return SMod(rename_columns(e.left, mapping), rename_columns(e.right, mapping))
    if isinstance(e, SFunc):
        return SFunc(e.name, tuple(rename_columns(a, mapping) for a in e.args))
    if isinstance(e, SRegex):
        return SRegex(rename_columns(e.value, mapping), rename_columns(e.pattern, mapping))
    raise TypeError(f"not a SQL expression: {e!r}")


# -- relational nodes --------------------------------------------------------


@dataclass(frozen=True)
class Scan:
    table: str
    schema: tuple  # ((name, type), ...) of the base table
    columns: tuple | None = None  # None means all


@dataclass(frozen=True)
class Select:
    predicate: SqlExpr
    input: "SqlQuery"


@dataclass(frozen=True)
class Project:
    exprs: tuple  # ((alias, type, SqlExpr), ...)
    input: "SqlQuery"


@dataclass(frozen=True)
class GroupBy:
    keys: tuple  # (name, ...)
    aggs: tuple  # ((alias, op, field-or-None), ...)
    input: "SqlQuery"


@dataclass(frozen=True)
class Window:
    partition: tuple  # (name, ...)
    order: tuple  # ((field, 'asc'|'desc'), ...)
    value_field: str
    alias: str
    input: "SqlQuery"


@dataclass(frozen=True)
class OrderBy:
    keys: tuple  # ((field, 'asc'|'desc'), ...)
    input: "SqlQuery"


@dataclass(frozen=True)
class Limit:
    n: int
    input: "SqlQuery"


SqlQuery = Union[Scan, Select, Project, GroupBy, Window, OrderBy, Limit]


def output_schema(q: SqlQuery) -> tuple:
    """(name, type) pairs of the query's result, in column order."""
    if isinstance(q, Scan):
        if q.columns is None:
            return tuple(q.schema)
        types = dict(q.schema)
        return tuple((c, types[c]) for c in q.columns)
    if isinstance(q, (Select, OrderBy, Limit)):
        return output_schema(q.input)
    if isinstance(q, Project):
        return tuple((alias, t) for alias, t, _e in q.exprs)
    if isinstance(q, GroupBy):
        child = dict(output_schema(q.input))
        out = [(k, child[k]) for k in q.keys]
        for alias, op, fld in q.aggs:
            if op in ("count", "sum", "mean"):
                out.append((alias, "number"))
            else:
                out.append((alias, child[fld]))
        return tuple(out)
    if isinstance(q, Window):
        return tuple(output_schema(q.input)) + ((q.alias, "number"),)
    raise TypeError(f"not a query node: {q!r}")


def child_of(q: SqlQuery):
    return None if isinstance(q, Scan) else q.input


def with_child(q: SqlQuery, child: SqlQuery) -> SqlQuery:
    if isinstance(q, Select):
        return Select(q.predicate, child)
    if isinstance(q, Project):
        return Project(q.exprs, child)
    if isinstance(q, GroupBy):
        return GroupBy(q.keys, q.aggs, child)
    if isinstance(q, Window):
        return Window(q.partition, q.order, q.value_field, q.alias, child)
    if isinstance(q, OrderBy):
        return OrderBy(q.keys, child)
    if isinstance(q, Limit):
        return Limit(q.n, child)
    raise TypeError(f"cannot replace child of {q!r}")
