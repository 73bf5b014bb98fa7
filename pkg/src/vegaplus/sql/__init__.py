"""Dialect-parameterized SQL compilation: translate, merge, rewrite, render."""

from .dialect import SQLITE, SqlDialect, get_dialect, load_dialects
from .render import render_sql, result_schema
from .rewrite import rewrite
from .translate import expr_to_sql, merge_region, translate_operator
from .tree import (
    GroupBy,
    Limit,
    OrderBy,
    Project,
    Scan,
    Select,
    SqlQuery,
    Window,
    output_schema,
)

__all__ = [
    "SQLITE",
    "SqlDialect",
    "get_dialect",
    "load_dialects",
    "render_sql",
    "result_schema",
    "rewrite",
    "expr_to_sql",
    "merge_region",
    "translate_operator",
    "Scan",
    "Select",
    "Project",
    "GroupBy",
    "Window",
    "OrderBy",
    "Limit",
    "SqlQuery",
    "output_schema",
]
