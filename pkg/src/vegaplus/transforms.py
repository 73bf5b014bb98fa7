"""In-memory transform evaluation, mirroring the SQL translation exactly.

Semantics follow SQL so the client interpreter and the server agree:
aggregates ignore nulls (sum over no values is null), count counts rows,
GROUP BY treats null as a regular key, an aggregate with no groupby always
yields one row, and ORDER BY puts nulls last.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exprs
from .errors import EvalError
from .specmodel import SignalParam, TransformDef, transform_output_schema
from .table import Table


@dataclass
class TransformResult:
    table: Table
    signal: tuple | None = None  # (name, (lo, hi)) published by extent
    dropped: int = 0  # rows dropped by bin for null in the binned field


def resolve_param(value, signals: dict):
    if isinstance(value, SignalParam):
        if value.name not in signals:
            raise EvalError(f"signal {value.name!r} has no value")
        return signals[value.name]
    return value


# ---------------------------------------------------------------------------
# Binning rule ("nicing"), shared with the SQL translation so both routes use
# identical (start, step) parameters.


def nice_bin_params(lo: float | None, hi: float | None, maxbins: float) -> tuple[float, float] | None:
    """Return (start, step) for a human-friendly binning of [lo, hi].

    step is the smallest of step0 * {1, 2, 5, 10} (step0 a power of ten)
    whose bin count fits within maxbins; start snaps to a step multiple.
    Returns None when the extent is unusable (null bounds).
    """
    if lo is None or hi is None:
        return None
    lo, hi = float(lo), float(hi)
    if math.isnan(lo) or math.isnan(hi):
        return None
    m = max(1, int(math.floor(maxbins)))
    span = hi - lo
    if span <= 0 or math.isinf(span):
        step = 1.0
    else:
        step0 = 10.0 ** math.floor(math.log10(span / m))
        step = step0 * 10
        for mult in (1.0, 2.0, 5.0, 10.0):
            cand = step0 * mult
            if math.ceil(span / cand) <= m:
                step = cand
                break
    start = step * math.floor(lo / step)
    return start, step


# ---------------------------------------------------------------------------
# Sort machinery: stable multi-key sort with nulls last; descending keys are
# rank-encoded so string columns can be reversed too.


def _rank_key(col: np.ndarray, is_string: bool, descending: bool) -> np.ndarray:
    if is_string:
        order = {}
        for v in sorted({x for x in col if x is not None}):
            order[v] = len(order)
        n_vals = len(order)
        ranks = np.array([order[v] if v is not None else n_vals for v in col], dtype=np.float64)
        if descending:
            ranks = np.where(ranks == n_vals, float(n_vals), (n_vals - 1) - ranks)
        return ranks
    key = col.astype(np.float64, copy=True)
    if descending:
        key = -key
    # nulls sort last regardless of direction
    return np.where(np.isnan(key), np.inf, key)


def sort_indices(table: Table, keys: list[tuple[str, str]], tiebreak_all: bool = False) -> np.ndarray:
    """Indices of a stable sort by (field, ascending|descending) keys.

    With ``tiebreak_all`` the remaining columns (schema order, ascending)
    break ties deterministically, mirroring the SQL window ordering.
    """
    if table.nrows == 0:
        return np.arange(0)
    all_keys = list(keys)
    if tiebreak_all:
        named = {f for f, _ in keys}
        for n, _t in table.schema:
            if n not in named:
                all_keys.append((n, "ascending"))
    arrays = []
    for fld, order in reversed(all_keys):
        col = table.column(fld)
        arrays.append(_rank_key(col, table.column_type(fld) == "string", order == "descending"))
    arrays.append(np.arange(table.nrows, dtype=np.float64))  # keep lexsort stable on full ties
    # np.lexsort sorts by the last key as primary; we appended original index
    # first so it acts as the final tiebreaker.
    return np.lexsort(tuple([arrays[-1]] + arrays[:-1]))


# ---------------------------------------------------------------------------
# Grouping


def group_codes(table: Table, fields: list[str]) -> tuple[np.ndarray, list[tuple]]:
    """Return (codes, group_keys): codes[i] indexes into group_keys.

    Null keys group together (SQL GROUP BY semantics). Group order follows
    first occurrence, which keeps evaluation deterministic.
    """
    n = table.nrows
    if not fields:
        return np.zeros(n, dtype=np.int64), [()]
    encoded = []
    for f in fields:
        col = table.column(f)
        if table.column_type(f) == "string":
            encoded.append([v for v in col])
        else:
            encoded.append([None if math.isnan(v) else float(v) for v in col])
    seen: dict[tuple, int] = {}
    codes = np.empty(n, dtype=np.int64)
    keys: list[tuple] = []
    for i in range(n):
        k = tuple(e[i] for e in encoded)
        code = seen.get(k)
        if code is None:
            code = len(keys)
            seen[k] = code
            keys.append(k)
        codes[i] = code
    return codes, keys


# ---------------------------------------------------------------------------
# Individual transforms


def t_filter(params: dict, table: Table, signals: dict) -> TransformResult:
    mask = exprs.eval_to_mask(params["expr"], table.columns, table.nrows, signals)
    return TransformResult(table.take(np.nonzero(mask)[0]))


def t_formula(params: dict, table: Table, signals: dict) -> TransformResult:
    etype = params.get("expr_type", "number")
    col = exprs.eval_to_column(params["expr"], etype, table.columns, table.nrows, signals)
    return TransformResult(table.with_column(params["as"], etype, col))


def t_extent(params: dict, table: Table, signals: dict) -> TransformResult:
    col = table.column(params["field"]).astype(np.float64)
    finite = col[~np.isnan(col)]
    if len(finite):
        lo, hi = float(np.min(finite)), float(np.max(finite))
    else:
        lo = hi = None
    out = Table.from_rows([("min", "number"), ("max", "number")], [(lo, hi)])
    result = TransformResult(out, signal=(params["signal"], (lo, hi)))
    return result


def t_bin(params: dict, table: Table, signals: dict) -> TransformResult:
    extent = resolve_param(params["extent"], signals)
    if isinstance(extent, (list, tuple)) and len(extent) == 2:
        lo, hi = extent
    else:
        raise EvalError(f"bin extent must be a [lo, hi] pair, got {extent!r}")
    maxbins = resolve_param(params["maxbins"], signals)
    if maxbins is None or isinstance(maxbins, (str, bool)):
        raise EvalError(f"maxbins must be numeric, got {maxbins!r}")
    col = table.column(params["field"]).astype(np.float64)
    keep = ~np.isnan(col)
    dropped = int(table.nrows - keep.sum())
    binned = nice_bin_params(lo, hi, float(maxbins))
    if binned is None:
        # Unusable extent: nothing can be binned.
        out = table.take(np.arange(0))
        out = out.with_column("bin0", "number", _nan_col(0))
        out = out.with_column("bin1", "number", _nan_col(0))
        return TransformResult(out, dropped=table.nrows)
    start, step = binned
    kept = table.take(np.nonzero(keep)[0])
    vals = kept.column(params["field"]).astype(np.float64)
    bin0 = start + step * np.floor((vals - start) / step)
    out = kept.with_column("bin0", "number", bin0)
    out = out.with_column("bin1", "number", bin0 + step)
    return TransformResult(out, dropped=dropped)


def _nan_col(n: int) -> np.ndarray:
    return np.full(n, np.nan, dtype=np.float64)


def t_aggregate(params: dict, table: Table, signals: dict) -> TransformResult:
    groupby = params["groupby"]
    codes, keys = group_codes(table, groupby)
    ngroups = len(keys)
    if table.nrows == 0 and groupby:
        ngroups, keys = 0, []

    out_schema: list[tuple[str, str]] = [(g, table.column_type(g)) for g in groupby]
    cols: dict[str, np.ndarray] = {}
    for j, g in enumerate(groupby):
        if table.column_type(g) == "string":
            col = np.empty(ngroups, dtype=object)
            for gi in range(ngroups):
                col[gi] = keys[gi][j]
        else:
            col = np.array([np.nan if keys[gi][j] is None else keys[gi][j] for gi in range(ngroups)], dtype=np.float64)
        cols[g] = col

    for op, fld, out_name in params["ops"]:
        if op == "count":
            agg = np.bincount(codes, minlength=ngroups).astype(np.float64) if ngroups else _nan_col(0)
            out_schema.append((out_name, "number"))
            cols[out_name] = agg
            continue
        ftype = table.column_type(fld)
        if ftype == "string":
            if op not in ("min", "max"):
                raise EvalError(f"{op} needs a numeric field, {fld!r} is string")
            col = table.column(fld)
            acc: list = [None] * ngroups
            for i in range(table.nrows):
                v = col[i]
                if v is None:
                    continue
                g = codes[i]
                if acc[g] is None or (v < acc[g] if op == "min" else v > acc[g]):
                    acc[g] = v
            out = np.empty(ngroups, dtype=object)
            out[:] = acc
            out_schema.append((out_name, "string"))
            cols[out_name] = out
            continue
        vals = table.column(fld).astype(np.float64)
        present = ~np.isnan(vals)
        nn = np.bincount(codes[present], minlength=ngroups).astype(np.float64) if ngroups else _nan_col(0)
        if op in ("sum", "mean"):
            sums = (
                np.bincount(codes[present], weights=vals[present], minlength=ngroups)
                if ngroups
                else _nan_col(0)
            )
            with np.errstate(invalid="ignore"):
                agg = np.where(nn > 0, sums, np.nan) if op == "sum" else np.where(nn > 0, sums / nn, np.nan)
        else:
            fill = np.inf if op == "min" else -np.inf
            acc = np.full(ngroups, fill, dtype=np.float64)
            if ngroups and present.any():
                ufunc = np.minimum if op == "min" else np.maximum
                ufunc.at(acc, codes[present], vals[present])
            agg = np.where(np.isinf(acc) & (nn == 0), np.nan, acc) if ngroups else _nan_col(0)
        out_schema.append((out_name, "number"))
        cols[out_name] = np.asarray(agg, dtype=np.float64)

    names = [n for n, _ in out_schema]
    if len(set(names)) != len(names):
        raise EvalError(f"aggregate output names collide: {names}")
    return TransformResult(Table(schema=out_schema, columns=cols, nrows=ngroups))


def t_collect(params: dict, table: Table, signals: dict) -> TransformResult:
    idx = sort_indices(table, params["sort"])
    return TransformResult(table.take(idx))


def t_stack(params: dict, table: Table, signals: dict) -> TransformResult:
    groupby = params["groupby"]
    sort_field, sort_order = params["sort"]
    value_field = params["field"]

    order = sort_indices(table, [(f, "ascending") for f in groupby] + [(sort_field, sort_order)], tiebreak_all=True)
    codes, _keys = group_codes(table, groupby)
    sorted_codes = codes[order]
    vals = table.column(value_field).astype(np.float64)[order]
    contrib = np.where(np.isnan(vals), 0.0, vals)  # running sum skips nulls

    # per-partition sequential accumulation, bit-identical to the window
    # function's running sum (a global cumsum minus segment bases would
    # leak cross-partition rounding noise)
    y1_sorted = np.empty(len(order), dtype=np.float64)
    if len(order):
        change = sorted_codes[1:] != sorted_codes[:-1]
        start_pos = np.concatenate(([0], np.nonzero(change)[0] + 1, [len(order)]))
        for s, e in zip(start_pos[:-1], start_pos[1:]):
            y1_sorted[s:e] = np.cumsum(contrib[s:e])
    y0_sorted = y1_sorted - vals  # null value -> null y0, matching SQL

    y0 = np.empty(table.nrows, dtype=np.float64)
    y1 = np.empty(table.nrows, dtype=np.float64)
    y0[order] = y0_sorted
    y1[order] = y1_sorted
    out = table.with_column("y0", "number", y0)
    out = out.with_column("y1", "number", y1)
    return TransformResult(out)


def t_project(params: dict, table: Table, signals: dict) -> TransformResult:
    missing = [f for f in params["fields"] if f not in table.columns]
    if missing:
        raise EvalError(f"project references missing fields {missing}")
    return TransformResult(table.select(params["fields"]))


_KIND_IMPL = {
    "filter": t_filter,
    "formula": t_formula,
    "extent": t_extent,
    "bin": t_bin,
    "aggregate": t_aggregate,
    "collect": t_collect,
    "stack": t_stack,
    "project": t_project,
}


def apply_transform_full(kind: str, params: dict, table: Table, signals: dict) -> TransformResult:
    try:
        impl = _KIND_IMPL[kind]
    except KeyError:
        raise EvalError(f"unknown transform kind {kind!r}") from None
    return impl(params, table, signals)


def apply_transform(kind: str, params: dict, table: Table, signals: dict | None = None) -> Table:
    """Evaluate one transform over a table; the public per-kind entry point.

    For extent the returned table is the single-row (min, max) relation it
    publishes; inside a dataflow the extent node passes its input through on
    the data edge while the pair feeds its output signal.
    """
    return apply_transform_full(kind, params, table, signals or {}).table


def checked_transform(kind: str, obj: dict, schema: list[tuple[str, str]], signal_types: dict[str, str]) -> TransformDef:
    """Convenience for tests/demos: parse + type-check a transform object."""
    from .specmodel import _parse_transform  # local import to avoid cycle at module load

    td = _parse_transform({"type": kind, **obj}, "$")
    transform_output_schema(td, schema, signal_types)
    return td
