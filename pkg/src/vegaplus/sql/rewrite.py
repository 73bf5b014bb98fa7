"""Rule-based query rewriting, applied to fixpoint (bounded at 100 passes).

Rules:
  (a) predicate pushdown: a Select commutes inward past a Project whose
      referenced columns are pass-through, and past an OrderBy;
  (b) projection pruning: columns no ancestor references are dropped from
      Project and Scan nodes (the root schema is preserved);
  (c) expression simplification: constant folding, boolean identities,
      double negation, comparisons of equal literals.
All rules are total and result-equivalent.
"""
from __future__ import annotations

import math

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
    expr_columns,
    output_schema,
    rename_columns,
    with_child,
)

MAX_PASSES = 100


def rewrite(q: SqlQuery) -> SqlQuery:
    for _ in range(MAX_PASSES):
        out = _simplify_node(q)
        out = _pushdown(out)
        out = _prune(out, tuple(n for n, _t in output_schema(out)))
        if out == q:
            return out
        q = out
    return q


# -- (a) predicate pushdown --------------------------------------------------


def _pushdown(q: SqlQuery) -> SqlQuery:
    if isinstance(q, Scan):
        return q
    q = with_child(q, _pushdown(q.input))
    if not isinstance(q, Select):
        return q
    child = q.input
    if isinstance(child, OrderBy):
        return OrderBy(child.keys, _pushdown(Select(q.predicate, child.input)))
    if isinstance(child, Project):
        passthrough = {alias: e.name for alias, _t, e in child.exprs if isinstance(e, SCol)}
        used = expr_columns(q.predicate)
        if used <= set(passthrough):
            pred = rename_columns(q.predicate, passthrough)
            return Project(child.exprs, _pushdown(Select(pred, child.input)))
    return q


# -- (b) projection pruning ---------------------------------------------------


def _prune(q: SqlQuery, required: tuple) -> SqlQuery:
    req = set(required)
    if isinstance(q, Scan):
        cols = [c for c, _t in q.schema if c in req]
        if not cols:
            cols = [q.schema[0][0]] if q.schema else []
        if q.columns is not None and list(q.columns) == cols:
            return q
        if cols == [c for c, _t in q.schema]:
            return Scan(q.table, q.schema, None)
        return Scan(q.table, q.schema, tuple(cols))
    if isinstance(q, Select):
        child_req = req | expr_columns(q.predicate)
        return Select(q.predicate, _prune(q.input, tuple(child_req)))
    if isinstance(q, Project):
        kept = tuple(item for item in q.exprs if item[0] in req)
        if not kept:
            kept = q.exprs[:1]
        child_req: set[str] = set()
        for _alias, _t, e in kept:
            child_req |= expr_columns(e)
        if not child_req:
            child_req = {output_schema(q.input)[0][0]}
        return Project(kept, _prune(q.input, tuple(child_req)))
    if isinstance(q, GroupBy):
        child_req = set(q.keys) | {fld for _a, _op, fld in q.aggs if fld is not None}
        if not child_req:
            child_req = {output_schema(q.input)[0][0]}
        return GroupBy(q.keys, q.aggs, _prune(q.input, tuple(child_req)))
    if isinstance(q, Window):
        child_cols = {n for n, _t in output_schema(q.input)}
        child_req = (req - {q.alias}) & child_cols
        child_req |= set(q.partition) | {f for f, _d in q.order} | {q.value_field}
        return Window(q.partition, q.order, q.value_field, q.alias, _prune(q.input, tuple(child_req)))
    if isinstance(q, OrderBy):
        child_req = req | {f for f, _d in q.keys}
        return OrderBy(q.keys, _prune(q.input, tuple(child_req)))
    if isinstance(q, Limit):
        return Limit(q.n, _prune(q.input, required))
    raise TypeError(f"not a query node: {q!r}")


# -- (c) expression simplification ---------------------------------------------


def _is_lit(e: SqlExpr) -> bool:
    return isinstance(e, SLit)


def _lit_bool(e: SqlExpr):
    if isinstance(e, SLit) and isinstance(e.value, bool):
        return e.value
    return None


def _fold_cmp(op: str, a, b):
    if isinstance(a, str) != isinstance(b, str):
        return None
    if isinstance(a, str) and op not in ("=", "<>"):
        if not (a.isascii() and b.isascii()):
            return None  # collation may differ from python ordering
    try:
        res = {
            "=": a == b,
            "<>": a != b,
            "<": a < b,
            "<=": a <= b,
            ">": a > b,
            ">=": a >= b,
        }[op]
    except TypeError:
        return None
    return SLit(bool(res), "boolean")


def simplify_expr(e: SqlExpr) -> SqlExpr:
    if isinstance(e, (SCol, SLit)):
        return e
    if isinstance(e, SUnary):
        operand = simplify_expr(e.operand)
        if e.op == "NOT":
            if isinstance(operand, SUnary) and operand.op == "NOT":
                return operand.operand  # double negation
            b = _lit_bool(operand)
            if b is not None:
                return SLit(not b, "boolean")
            return SUnary("NOT", operand)
        if isinstance(operand, SLit) and isinstance(operand.value, float):
            return SLit(-operand.value)
        if isinstance(operand, SUnary) and operand.op == "-":
            return operand.operand
        return SUnary("-", operand)
    if isinstance(e, SNotNull):
        operand = simplify_expr(e.operand)
        if isinstance(operand, SLit):
            return SLit(operand.value is not None, "boolean")
        return SNotNull(operand)
    if isinstance(e, SMod):
        left, right = simplify_expr(e.left), simplify_expr(e.right)
        if (
            _is_lit(left)
            and _is_lit(right)
            and isinstance(left.value, float)
            and isinstance(right.value, float)
            and right.value != 0
        ):
            return SLit(math.fmod(left.value, right.value))
        return SMod(left, right)
    if isinstance(e, SFunc):
        args = tuple(simplify_expr(a) for a in e.args)
        if all(_is_lit(a) and isinstance(a.value, float) for a in args):
            vals = [a.value for a in args]
            try:
                if e.name == "abs":
                    return SLit(abs(vals[0]))
                if e.name == "floor":
                    return SLit(float(math.floor(vals[0])))
                if e.name == "ceil":
                    return SLit(float(math.ceil(vals[0])))
                if e.name == "sqrt" and vals[0] >= 0:
                    return SLit(math.sqrt(vals[0]))
                if e.name == "min":
                    return SLit(min(vals))
                if e.name == "max":
                    return SLit(max(vals))
            except (ValueError, OverflowError):
                pass
        return SFunc(e.name, args)
    if isinstance(e, SRegex):
        return SRegex(simplify_expr(e.value), simplify_expr(e.pattern))
    if isinstance(e, SBin):
        left, right = simplify_expr(e.left), simplify_expr(e.right)
        if e.op == "AND":
            lb, rb = _lit_bool(left), _lit_bool(right)
            if lb is True:
                return right
            if rb is True:
                return left
            if lb is False or rb is False:
                return SLit(False, "boolean")  # safe under three-valued logic
            return SBin("AND", left, right)
        if e.op == "OR":
            lb, rb = _lit_bool(left), _lit_bool(right)
            if lb is False:
                return right
            if rb is False:
                return left
            if lb is True or rb is True:
                return SLit(True, "boolean")
            return SBin("OR", left, right)
        if _is_lit(left) and _is_lit(right) and left.value is not None and right.value is not None:
            a, b = left.value, right.value
            if e.op in ("=", "<>", "<", "<=", ">", ">="):
                folded = _fold_cmp(e.op, a, b)
                if folded is not None:
                    return folded
            elif isinstance(a, float) and isinstance(b, float):
                try:
                    if e.op == "+":
                        return SLit(a + b)
                    if e.op == "-":
                        return SLit(a - b)
                    if e.op == "*":
                        return SLit(a * b)
                    if e.op == "/" and b != 0:
                        return SLit(a / b)
                except OverflowError:
                    pass
        return SBin(e.op, left, right)
    raise TypeError(f"not a SQL expression: {e!r}")


def _simplify_node(q: SqlQuery) -> SqlQuery:
    if isinstance(q, Scan):
        return q
    child = _simplify_node(q.input)
    if isinstance(q, Select):
        return Select(simplify_expr(q.predicate), child)
    if isinstance(q, Project):
        return Project(tuple((a, t, simplify_expr(e)) for a, t, e in q.exprs), child)
    return with_child(q, child)
