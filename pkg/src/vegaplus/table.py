"""Columnar table with typed schema and null-aware serialization.

Columns are numpy arrays: float64 for 'number' and 'boolean' (NaN encodes
null; booleans are 0.0/1.0), object for 'string' (None encodes null). Row
views materialize python scalars on demand. CSV follows RFC 4180 with a
required header row; an empty cell reads back as null.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

ScalarType = str  # 'number' | 'string' | 'boolean'

_BOOL_WORDS = {"true": 1.0, "false": 0.0, "TRUE": 1.0, "FALSE": 0.0, "True": 1.0, "False": 0.0}


def _empty_column(ftype: ScalarType, n: int) -> np.ndarray:
    if ftype == "string":
        col = np.empty(n, dtype=object)
        col[:] = None
        return col
    return np.full(n, np.nan, dtype=np.float64)


@dataclass
class Table:
    schema: list[tuple[str, ScalarType]]
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    nrows: int = 0

    def __post_init__(self):
        names = [n for n, _ in self.schema]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in schema: {names}")
        if not self.columns:
            self.columns = {n: _empty_column(t, self.nrows) for n, t in self.schema}
        else:
            lengths = {len(c) for c in self.columns.values()}
            if lengths and lengths != {self.nrows}:
                raise ValueError("column length does not match nrows")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rows(cls, schema: list[tuple[str, ScalarType]], rows: list[tuple]) -> "Table":
        n = len(rows)
        cols: dict[str, np.ndarray] = {}
        for j, (name, ftype) in enumerate(schema):
            if ftype == "string":
                col = np.empty(n, dtype=object)
                for i, row in enumerate(rows):
                    v = row[j]
                    col[i] = None if v is None else str(v)
            else:
                col = np.empty(n, dtype=np.float64)
                for i, row in enumerate(rows):
                    v = row[j]
                    col[i] = np.nan if v is None else float(v)
            cols[name] = col
        return cls(schema=list(schema), columns=cols, nrows=n)

    @classmethod
    def from_columns(cls, schema: list[tuple[str, ScalarType]], columns: dict[str, np.ndarray]) -> "Table":
        n = len(next(iter(columns.values()))) if columns else 0
        return cls(schema=list(schema), columns=dict(columns), nrows=n)

    # -- basic accessors ---------------------------------------------------

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def column_type(self, name: str) -> ScalarType:
        for n, t in self.schema:
            if n == name:
                return t
        raise KeyError(name)

    def names(self) -> list[str]:
        return [n for n, _ in self.schema]

    def cell(self, name: str, i: int):
        t = self.column_type(name)
        v = self.columns[name][i]
        return _decode(v, t)

    def rows(self) -> list[tuple]:
        decoded = [[_decode(v, t) for v in self.columns[n]] for n, t in self.schema]
        return [tuple(col[i] for col in decoded) for i in range(self.nrows)]

    def take(self, indices: np.ndarray) -> "Table":
        cols = {n: c[indices] for n, c in self.columns.items()}
        return Table(schema=list(self.schema), columns=cols, nrows=int(len(indices)))

    def head(self, n: int) -> "Table":
        idx = np.arange(min(n, self.nrows))
        return self.take(idx)

    def with_column(self, name: str, ftype: ScalarType, col: np.ndarray) -> "Table":
        """Append or replace a column, keeping its original schema position."""
        schema = list(self.schema)
        cols = dict(self.columns)
        if name in cols:
            schema = [(n, ftype if n == name else t) for n, t in schema]
        else:
            schema.append((name, ftype))
        cols[name] = col
        return Table(schema=schema, columns=cols, nrows=self.nrows)

    def select(self, names: list[str]) -> "Table":
        schema = [(n, self.column_type(n)) for n in names]
        cols = {n: self.columns[n] for n in names}
        return Table(schema=schema, columns=cols, nrows=self.nrows)

    def estimated_bytes(self) -> int:
        total = 0
        for n, t in self.schema:
            col = self.columns[n]
            if t == "string":
                total += sum(len(v) for v in col if v is not None) + self.nrows
            else:
                total += 8 * self.nrows
        return total

    # -- serialization -----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(self.names())
        encoded = [_encode_csv_column(self.columns[n], t) for n, t in self.schema]
        for i in range(self.nrows):
            w.writerow([col[i] for col in encoded])
        return buf.getvalue()

    def csv_byte_length(self) -> int:
        """Length in bytes of ``to_csv()`` without materializing the blob."""
        total = len(",".join(self.names())) + 2
        ncols = len(self.schema)
        if self.nrows == 0 or ncols == 0:
            return total
        per_row_overhead = (ncols - 1) + 2  # commas + CRLF
        total += per_row_overhead * self.nrows
        for n, t in self.schema:
            col = self.columns[n]
            if t == "string":
                total += sum(len(v) for v in col if v is not None)
            elif t == "boolean":
                total += int(np.sum(col == 1.0) * 4 + np.sum(col == 0.0) * 5)
            else:
                finite = col[~np.isnan(col)]
                if len(finite):
                    total += int(np.char.str_len(np.char.mod("%.17g", finite)).sum())
        return total

    @classmethod
    def from_csv(cls, text: str, schema: list[tuple[str, ScalarType]] | None = None) -> "Table":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("CSV input is empty; a header row is required") from None
        raw_rows = [row for row in reader if row]
        for i, row in enumerate(raw_rows):
            if len(row) != len(header):
                raise ValueError(f"CSV row {i + 2} has {len(row)} fields, expected {len(header)}")
        if schema is None:
            schema = [(name, _infer_type([r[j] for r in raw_rows])) for j, name in enumerate(header)]
        else:
            declared = [n for n, _ in schema]
            if declared != header:
                raise ValueError(f"CSV header {header} does not match schema {declared}")
        rows = []
        for r in raw_rows:
            rows.append(tuple(_parse_cell(r[j], schema[j][1]) for j in range(len(header))))
        return cls.from_rows(schema, rows)

    def to_ndjson(self) -> str:
        names = self.names()
        lines = []
        for row in self.rows():
            lines.append(json.dumps(dict(zip(names, row)), allow_nan=False))
        return "\n".join(lines) + ("\n" if lines else "")

    def to_records(self) -> list[dict]:
        names = self.names()
        return [dict(zip(names, row)) for row in self.rows()]


def _decode(v, ftype: ScalarType):
    if ftype == "string":
        return v
    f = float(v)
    if math.isnan(f):
        return None
    if ftype == "boolean":
        return bool(f)
    return f


def _encode_csv_column(col: np.ndarray, ftype: ScalarType) -> list[str]:
    if ftype == "string":
        return ["" if v is None else v for v in col]
    if ftype == "boolean":
        return ["" if math.isnan(v) else ("true" if v else "false") for v in col]
    return ["" if math.isnan(v) else "%.17g" % v for v in col]


def _infer_type(values: list[str]) -> ScalarType:
    seen_any = False
    all_num = True
    all_bool = True
    for v in values:
        if v == "":
            continue
        seen_any = True
        if v not in _BOOL_WORDS:
            all_bool = False
        try:
            float(v)
        except ValueError:
            all_num = False
        if not all_num and not all_bool:
            return "string"
    if not seen_any:
        return "string"
    if all_bool:
        return "boolean"
    if all_num:
        return "number"
    return "string"


def _parse_cell(v: str, ftype: ScalarType):
    if v == "":
        return None
    if ftype == "number":
        try:
            return float(v)
        except ValueError:
            raise ValueError(f"cannot parse {v!r} as a number") from None
    if ftype == "boolean":
        if v in _BOOL_WORDS:
            return bool(_BOOL_WORDS[v])
        raise ValueError(f"cannot parse {v!r} as a boolean")
    return v


# ---------------------------------------------------------------------------
# Comparison helpers (used by tests and by result verification)


def _sort_key(row: tuple) -> tuple:
    key = []
    for v in row:
        if v is None:
            key.append((2, ""))
        elif isinstance(v, str):
            key.append((1, v))
        else:
            key.append((0, round(float(v), 9)))
    return tuple(key)


def tables_equal(a: Table, b: Table, tol: float = 1e-9) -> bool:
    """Multiset equality with numeric tolerance; columns aligned by name."""
    if set(a.names()) != set(b.names()):
        return False
    if a.nrows != b.nrows:
        return False
    names = a.names()
    b = b.select(names)
    ra = sorted(a.rows(), key=_sort_key)
    rb = sorted(b.rows(), key=_sort_key)
    for x, y in zip(ra, rb):
        for u, v in zip(x, y):
            if u is None or v is None:
                if u is not None or v is not None:
                    return False
            elif isinstance(u, str) or isinstance(v, str):
                if u != v:
                    return False
            else:
                fu, fv = float(u), float(v)
                if fu == fv or (math.isnan(fu) and math.isnan(fv)):
                    continue
                if not math.isclose(fu, fv, rel_tol=tol, abs_tol=tol):
                    return False
    return True
