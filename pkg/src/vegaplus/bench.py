"""Benchmark harness: synthetic flights-shaped data, plan sweep, CSV output.

Each (row count, plan) pair executes cold (fresh cache and runtime state) so
the measured TimingBreakdown reflects the startup path the partitioner
optimizes. The simulated network sleeps for real, so measured totals include
the transfer penalty the baseline pays for shipping raw rows.
"""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from .cache import ResultCache
from .config import Config
from .dataflow import build_dataflow
from .drivers import EmbeddedDriver, SimulatedNetwork
from .partition import baseline_plan, choose_partition
from .runtime import RuntimeState, execute_plan
from .session import Session
from .specmodel import parse_spec
from .stats import NetworkProfile, Stats
from .table import Table

BENCH_TABLE = "bench_flights"


def synthetic_flights(rows: int, seed: int = 7) -> Table:
    """Arrival-delay-shaped column: mostly small, a long positive tail."""
    rng = np.random.default_rng(seed)
    base = rng.normal(10.0, 35.0, rows)
    tail = rng.exponential(60.0, rows) * (rng.random(rows) < 0.15)
    return Table.from_columns([("delay", "number")], {"delay": np.round(base + tail, 1)})


def flights_bench_spec(table: str = BENCH_TABLE, maxbins: float = 20) -> str:
    return json.dumps(
        {
            "vegaplus_version": 1,
            "data": [
                {"name": "flights", "table": table, "schema": {"delay": "number"}},
                {
                    "name": "binned",
                    "source": "flights",
                    "transform": [
                        {"type": "extent", "field": "delay", "signal": "delay_extent"},
                        {
                            "type": "bin",
                            "field": "delay",
                            "extent": {"signal": "delay_extent"},
                            "maxbins": {"signal": "maxbins"},
                        },
                        {"type": "aggregate", "groupby": ["bin0", "bin1"], "ops": ["count"], "as": ["count"]},
                    ],
                },
            ],
            "signals": [
                {"name": "maxbins", "value": maxbins, "bind": {"input": "range", "min": 5, "max": 100, "step": 5}}
            ],
            "marks": [{"type": "rect", "from": {"data": "binned"}, "encoding": {"x": "bin0", "x2": "bin1", "y": "count"}}],
        }
    )


def run_bench(
    rows_list: list[int],
    repeat: int = 1,
    latency_ms: float = 50.0,
    bandwidth_mbps: float = 10.0,
    spec_json: str | None = None,
    data_files: dict | None = None,
    db_path: str = ":memory:",
    seed: int = 7,
    config: Config | None = None,
) -> list[dict]:
    """Sweep row counts; returns one record per (rows, plan label, repeat)."""
    config = config or Config()
    records: list[dict] = []
    for rows in rows_list:
        driver = EmbeddedDriver(db_path)
        try:
            if data_files:
                for name, path in data_files.items():
                    with open(path) as fh:
                        driver.ingest(name, fh.read())
            else:
                driver.ingest_table(BENCH_TABLE, synthetic_flights(rows, seed), digest=f"synthetic:{rows}:{seed}")
            net = NetworkProfile.from_mbps(latency_ms, bandwidth_mbps)
            sim = SimulatedNetwork(driver, net)
            spec = parse_spec(
                spec_json or flights_bench_spec(),
                {t: driver.table_schema(t) for t in driver.table_names()},
            )
            g = build_dataflow(spec)
            bindings = {}
            stats_tables = {}
            for ds in spec.datasets:
                if ds.is_derived:
                    continue
                physical = ds.table or ds.name
                bindings[ds.name] = physical
                stats_tables[ds.name] = driver.table_stats(physical)
            stats = Stats(tables=stats_tables, default_selectivity=config.cost.default_selectivity)

            recommended = choose_partition(g, stats, net, sim.dialect, config.cost)
            baseline = baseline_plan(g, stats, net, config.cost)
            for label, plan in (("baseline", baseline), ("recommended", recommended)):
                for r in range(repeat):
                    _sinks, timing = execute_plan(
                        plan,
                        g,
                        sim,
                        cache=ResultCache(0),  # cold: no result reuse between runs
                        bindings=bindings,
                        state=RuntimeState(),
                        label=label,
                    )
                    records.append(
                        {
                            "rows": rows,
                            "label": label,
                            "repeat": r,
                            "server_ms": round(timing.server_ms, 3),
                            "network_ms": round(timing.network_ms, 3),
                            "client_ms": round(timing.client_ms, 3),
                            "total_ms": round(timing.total_ms, 3),
                            "cuts": json.dumps(plan.cuts, sort_keys=True),
                        }
                    )
        finally:
            driver.close()
    return records


def records_to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    fields = ["rows", "label", "repeat", "server_ms", "network_ms", "client_ms", "total_ms", "cuts"]
    w = csv.DictWriter(buf, fieldnames=fields)
    w.writeheader()
    for rec in records:
        w.writerow(rec)
    return buf.getvalue()


def interaction_sweep(session: Session, values: list[float], signal: str = "maxbins") -> list[dict]:
    """Drive a slider sweep through a session, prefetching between steps."""
    out = []
    for v in values:
        sinks, timing, label = session.handle_interaction(signal, v)
        out.append({"value": v, "label": label, "timing": timing.to_json()})
        session.prefetch_now()
    return out
