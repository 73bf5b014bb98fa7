"""Database drivers: the embedded engine, a simulated-network wrapper, a
JSON-over-HTTP remote driver, and a call-counting wrapper for tests.

The embedded engine is sqlite via the standard library, with a registered
``regexp`` function so the sqlite dialect's REGEXP operator works. Query
execution is read-only from the engine's point of view; ingestion is
idempotent per (table name, content hash).
"""
from __future__ import annotations

import hashlib
import math
import re
import sqlite3
import threading
import time
import urllib.parse
from abc import ABC, abstractmethod

import numpy as np

from .errors import DriverError, UnknownDatasetError
from .sql.dialect import SQLITE, SqlDialect
from .stats import FieldStats, TableStats
from .table import Table

_DISTINCT_SAMPLE_CAP = 1000
_EXACT_STATS_LIMIT = 100_000


class DbDriver(ABC):
    """Driver contract: execute query SQL, ingest CSV, report table stats.

    Drivers accumulate (server_ms, network_ms) per call; ``take_timings``
    returns and resets the accumulators so the runtime can attribute time
    between markers.
    """

    dialect: SqlDialect

    @abstractmethod
    def execute(self, sql: str, schema: list[tuple[str, str]] | None = None) -> Table: ...

    @abstractmethod
    def ingest(self, name: str, csv_text: str) -> int: ...

    @abstractmethod
    def table_stats(self, name: str) -> TableStats: ...

    @abstractmethod
    def table_schema(self, name: str) -> list[tuple[str, str]]: ...

    @abstractmethod
    def content_hash(self, name: str) -> str: ...

    def table_names(self) -> list[str]:
        return []

    def take_timings(self) -> tuple[float, float]:
        server, network = self._server_ms, self._network_ms
        self._server_ms = 0.0
        self._network_ms = 0.0
        return server, network

    _server_ms = 0.0
    _network_ms = 0.0

    def close(self):
        pass


def _regexp(pattern, value):
    if pattern is None or value is None:
        return None
    return 1 if re.search(pattern, str(value)) else 0


def _coerce(table: Table, schema: list[tuple[str, str]] | None) -> Table:
    if schema is None:
        return table
    cols = {}
    for name, ftype in schema:
        src = table.columns[name]
        if ftype == "string":
            col = np.empty(len(src), dtype=object)
            for i, v in enumerate(src):
                col[i] = None if v is None else str(v)
        else:
            col = np.array(
                [np.nan if v is None else float(v) for v in src],
                dtype=np.float64,
            )
        cols[name] = col
    return Table(schema=list(schema), columns=cols, nrows=table.nrows)


class EmbeddedDriver(DbDriver):
    """sqlite-backed analytical engine; the default back-end."""

    def __init__(self, path: str = ":memory:", disable_windows: bool = False):
        self.path = path
        self.con = sqlite3.connect(path, check_same_thread=False)
        self.con.create_function("regexp", 2, _regexp, deterministic=True)
        self._lock = threading.Lock()
        self._hashes: dict[str, str] = {}
        self._schemas: dict[str, list[tuple[str, str]]] = {}
        self.dialect = SQLITE.without_windows() if disable_windows else SQLITE
        self._load_meta()

    def _load_meta(self):
        with self._lock:
            self.con.execute(
                "CREATE TABLE IF NOT EXISTS _vegaplus_meta (name TEXT PRIMARY KEY, hash TEXT, schema TEXT)"
            )
            for name, h, schema in self.con.execute("SELECT name, hash, schema FROM _vegaplus_meta"):
                self._hashes[name] = h
                self._schemas[name] = [tuple(p.split(":")) for p in schema.split(",")]

    # -- queries -----------------------------------------------------------

    def execute(self, sql: str, schema: list[tuple[str, str]] | None = None) -> Table:
        t0 = time.perf_counter()
        with self._lock:
            try:
                cur = self.con.execute(sql)
                rows = cur.fetchall()
                names = [d[0] for d in cur.description]
            except sqlite3.Error as exc:
                raise DriverError(str(exc), sql=sql) from exc
        self._server_ms += (time.perf_counter() - t0) * 1000.0
        if schema is not None:
            out_schema = schema
        else:
            out_schema = [(n, _infer_sql_type(rows, j)) for j, n in enumerate(names)]
        positions = {n: j for j, n in enumerate(names)}
        cols = {}
        for name, ftype in out_schema:
            if name not in positions:
                raise DriverError(f"result is missing column {name!r}", sql=sql)
            j = positions[name]
            if ftype == "string":
                col = np.empty(len(rows), dtype=object)
                for i, r in enumerate(rows):
                    col[i] = None if r[j] is None else str(r[j])
            else:
                col = np.array(
                    [np.nan if r[j] is None or isinstance(r[j], (str, bytes)) else float(r[j]) for r in rows],
                    dtype=np.float64,
                )
            cols[name] = col
        return Table(schema=list(out_schema), columns=cols, nrows=len(rows))

    # -- ingestion ---------------------------------------------------------

    def ingest(self, name: str, csv_text: str) -> int:
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", name):
            raise DriverError(f"table name {name!r} is not a valid identifier")
        digest = hashlib.sha256(csv_text.encode()).hexdigest()
        if self._hashes.get(name) == digest:
            with self._lock:
                (count,) = self.con.execute(f'SELECT COUNT(*) FROM "{name}"').fetchone()
            return int(count)
        table = Table.from_csv(csv_text)
        self.ingest_table(name, table, digest)
        return table.nrows

    def ingest_table(self, name: str, table: Table, digest: str | None = None) -> int:
        """Load an in-memory table (bench path skips CSV round-tripping)."""
        if digest is None:
            digest = hashlib.sha256(repr(table.schema).encode() + str(table.nrows).encode()).hexdigest()
        cols = []
        for fname, ftype in table.schema:
            affinity = "TEXT" if ftype == "string" else "REAL"
            cols.append(f'"{fname}" {affinity}')
        with self._lock:
            self.con.execute(f'DROP TABLE IF EXISTS "{name}"')
            self.con.execute(f'CREATE TABLE "{name}" ({", ".join(cols)})')
            placeholders = ", ".join("?" for _ in table.schema)
            data = list(zip(*[_sql_column(table.columns[n], t) for n, t in table.schema])) if table.schema else []
            self.con.executemany(f'INSERT INTO "{name}" VALUES ({placeholders})', data)
            schema_txt = ",".join(f"{n}:{t}" for n, t in table.schema)
            self.con.execute(
                "INSERT OR REPLACE INTO _vegaplus_meta (name, hash, schema) VALUES (?, ?, ?)",
                (name, digest, schema_txt),
            )
            self.con.commit()
        self._hashes[name] = digest
        self._schemas[name] = list(table.schema)
        return table.nrows

    # -- metadata ----------------------------------------------------------

    def table_schema(self, name: str) -> list[tuple[str, str]]:
        if name not in self._schemas:
            raise UnknownDatasetError(f"table {name!r} has not been ingested")
        return list(self._schemas[name])

    def content_hash(self, name: str) -> str:
        if name not in self._hashes:
            raise UnknownDatasetError(f"table {name!r} has not been ingested")
        return self._hashes[name]

    def table_names(self) -> list[str]:
        return sorted(self._schemas)

    def table_stats(self, name: str) -> TableStats:
        schema = self.table_schema(name)
        q = f'SELECT COUNT(*) FROM "{name}"'
        with self._lock:
            (rows,) = self.con.execute(q).fetchone()
            fields: dict[str, FieldStats] = {}
            sample = f'(SELECT * FROM "{name}" LIMIT {_DISTINCT_SAMPLE_CAP})' if rows > _EXACT_STATS_LIMIT else f'"{name}"'
            width_total = 0.0
            for fname, ftype in schema:
                qf = f'"{fname}"'
                (distinct,) = self.con.execute(f"SELECT COUNT(DISTINCT {qf}) FROM {sample}").fetchone()
                mn = mx = None
                if ftype == "number":
                    mn, mx = self.con.execute(f"SELECT MIN({qf}), MAX({qf}) FROM {sample}").fetchone()
                (w,) = self.con.execute(
                    f"SELECT AVG(LENGTH(CAST({qf} AS TEXT))) FROM {sample} WHERE {qf} IS NOT NULL"
                ).fetchone()
                width = float(w) if w is not None else 8.0
                fields[fname] = FieldStats(distinct=float(distinct), min=mn, max=mx, mean_width=width)
                width_total += width + 1
        return TableStats(row_count=int(rows), mean_row_width=max(width_total, 1.0), fields=fields)

    def close(self):
        self.con.close()


def _sql_column(col: np.ndarray, ftype: str) -> list:
    if ftype == "string":
        return [v for v in col]
    return [None if math.isnan(v) else float(v) for v in col]


def _infer_sql_type(rows: list, j: int) -> str:
    for r in rows:
        v = r[j]
        if v is None:
            continue
        return "string" if isinstance(v, (str, bytes)) else "number"
    return "number"


class SimulatedNetwork(DbDriver):
    """Wraps a driver, adding round-trip latency plus size-proportional
    transfer delay on query results. A zero profile is byte-transparent."""

    def __init__(self, inner: DbDriver, profile):
        self.inner = inner
        self.profile = profile
        self.dialect = inner.dialect

    def execute(self, sql: str, schema: list[tuple[str, str]] | None = None) -> Table:
        table = self.inner.execute(sql, schema)
        if not self.profile.is_zero:
            delay = self.profile.transfer_ms(table.csv_byte_length())
            time.sleep(delay / 1000.0)
            self._network_ms += delay
        return table

    def ingest(self, name: str, csv_text: str) -> int:
        return self.inner.ingest(name, csv_text)

    def table_stats(self, name: str) -> TableStats:
        return self.inner.table_stats(name)

    def table_schema(self, name: str) -> list[tuple[str, str]]:
        return self.inner.table_schema(name)

    def content_hash(self, name: str) -> str:
        return self.inner.content_hash(name)

    def table_names(self) -> list[str]:
        return self.inner.table_names()

    def take_timings(self) -> tuple[float, float]:
        server, _ = self.inner.take_timings()
        network = self._network_ms
        self._network_ms = 0.0
        return server, network

    def close(self):
        self.inner.close()


class InstrumentedDriver(DbDriver):
    """Counts execute() calls; used to assert warm-cache paths issue none."""

    def __init__(self, inner: DbDriver):
        self.inner = inner
        self.dialect = inner.dialect
        self.execute_calls = 0
        self.executed_sql: list[str] = []

    def execute(self, sql: str, schema: list[tuple[str, str]] | None = None) -> Table:
        self.execute_calls += 1
        self.executed_sql.append(sql)
        return self.inner.execute(sql, schema)

    def ingest(self, name: str, csv_text: str) -> int:
        return self.inner.ingest(name, csv_text)

    def table_stats(self, name: str) -> TableStats:
        return self.inner.table_stats(name)

    def table_schema(self, name: str) -> list[tuple[str, str]]:
        return self.inner.table_schema(name)

    def content_hash(self, name: str) -> str:
        return self.inner.content_hash(name)

    def table_names(self) -> list[str]:
        return self.inner.table_names()

    def take_timings(self) -> tuple[float, float]:
        return self.inner.take_timings()

    def close(self):
        self.inner.close()


class RemoteDriver(DbDriver):
    """Speaks the JSON-over-HTTP SQL gateway protocol (see ``sql_gateway_app``).

    Capabilities are probed at connect time; network_ms is wall time minus
    the server-reported execution time.
    """

    def __init__(self, url: str, client=None):
        import httpx

        self.url = url.rstrip("/")
        self.client = client or httpx.Client(base_url=self.url, timeout=60.0)
        try:
            caps = self.client.get("/capabilities").json()
        except Exception as exc:
            raise DriverError(f"cannot probe capabilities at {url}: {exc}") from exc
        self.dialect = SqlDialect(
            name=caps["dialect"],
            supports_windows=bool(caps["supports_windows"]),
            regex_template=caps["regex_template"],
            mod_template=caps["mod_template"],
            float_cast_template=caps["float_cast_template"],
            nulls_last=caps["nulls_last"],
        )

    def _post(self, path: str, payload: dict) -> dict:
        r = self.client.post(path, json=payload)
        if r.status_code != 200:
            raise DriverError(f"gateway error {r.status_code}: {r.text[:500]}")
        return r.json()

    def execute(self, sql: str, schema: list[tuple[str, str]] | None = None) -> Table:
        t0 = time.perf_counter()
        body = self._post("/sql", {"sql": sql})
        wall = (time.perf_counter() - t0) * 1000.0
        server = float(body.get("server_ms", 0.0))
        self._server_ms += server
        self._network_ms += max(wall - server, 0.0)
        schema_over_wire = [tuple(p) for p in body["schema"]]
        table = Table.from_rows(schema_over_wire, [tuple(r) for r in body["rows"]])
        return _coerce(table, schema) if schema else table

    def ingest(self, name: str, csv_text: str) -> int:
        return int(self._post("/ingest", {"name": name, "csv": csv_text})["rows"])

    def table_stats(self, name: str) -> TableStats:
        body = self._post("/stats", {"name": name})
        fields = {
            k: FieldStats(distinct=v["distinct"], min=v["min"], max=v["max"], mean_width=v["mean_width"])
            for k, v in body["fields"].items()
        }
        return TableStats(row_count=body["row_count"], mean_row_width=body["mean_row_width"], fields=fields)

    def table_schema(self, name: str) -> list[tuple[str, str]]:
        return [tuple(p) for p in self._post("/schema", {"name": name})["schema"]]

    def content_hash(self, name: str) -> str:
        return self._post("/hash", {"name": name})["hash"]

    def close(self):
        self.client.close()


try:  # gateway body models; module scope so FastAPI can resolve annotations
    from pydantic import BaseModel as _BaseModel

    class SqlBody(_BaseModel):
        sql: str

    class NameBody(_BaseModel):
        name: str

    class IngestBody(_BaseModel):
        name: str
        csv: str

except ImportError:  # pragma: no cover - pydantic ships with fastapi
    SqlBody = NameBody = IngestBody = None


def sql_gateway_app(driver: DbDriver):
    """Expose a driver over the gateway protocol (the remote counterpart)."""
    from fastapi import FastAPI

    app = FastAPI(title="vegaplus sql gateway")

    @app.get("/capabilities")
    def capabilities():
        d = driver.dialect
        return {
            "dialect": d.name,
            "supports_windows": d.supports_windows,
            "regex_template": d.regex_template,
            "mod_template": d.mod_template,
            "float_cast_template": d.float_cast_template,
            "nulls_last": d.nulls_last,
        }

    @app.post("/sql")
    def run_sql(body: SqlBody):
        driver.take_timings()
        table = driver.execute(body.sql)
        server_ms, _ = driver.take_timings()
        return {
            "schema": [list(p) for p in table.schema],
            "rows": [list(r) for r in table.rows()],
            "server_ms": server_ms,
        }

    @app.post("/ingest")
    def ingest(body: IngestBody):
        return {"rows": driver.ingest(body.name, body.csv)}

    @app.post("/stats")
    def stats(body: NameBody):
        st = driver.table_stats(body.name)
        return {
            "row_count": st.row_count,
            "mean_row_width": st.mean_row_width,
            "fields": {
                k: {"distinct": f.distinct, "min": f.min, "max": f.max, "mean_width": f.mean_width}
                for k, f in st.fields.items()
            },
        }

    @app.post("/schema")
    def schema(body: NameBody):
        return {"schema": [list(p) for p in driver.table_schema(body.name)]}

    @app.post("/hash")
    def content_hash(body: NameBody):
        return {"hash": driver.content_hash(body.name)}

    return app


def embedded_driver(path: str = ":memory:") -> EmbeddedDriver:
    return EmbeddedDriver(path)


def remote_driver(url: str, client=None) -> RemoteDriver:
    return RemoteDriver(url, client=client)


def driver_from_url(url: str) -> DbDriver:
    """``embedded://path.db`` (or ``embedded://:memory:``) and http(s) URLs."""
    parsed = urllib.parse.urlparse(url)
    if parsed.scheme == "embedded":
        target = (parsed.netloc or "") + (parsed.path or "")
        return EmbeddedDriver(target or ":memory:")
    if parsed.scheme in ("http", "https"):
        return RemoteDriver(url)
    raise DriverError(f"unsupported driver URL scheme {parsed.scheme!r}; use embedded:// or http(s)://")
