"""Interactive session: one spec bound to data, plans, cache, and predictor.

The session runs the startup pipeline (parse, build, partition, execute),
serves signal interactions through the cache-aware runtime, refreshes the
prefetch queue after every interaction, and keeps the append-only timing
history the dashboard charts.
"""
from __future__ import annotations

import json
import threading
import time
import uuid

from .cache import ResultCache
from .config import Config
from .dataflow import build_dataflow
from .errors import SignalDomainError, UnknownDatasetError, UnknownSignalError
from .partition import (
    PartitionPlan,
    apply_override,
    baseline_plan,
    candidate_plans_for_interactions,
    choose_partition,
    plan_to_json,
)
from .predict import InteractionPredictor, Prefetcher
from .runtime import (
    RuntimeState,
    execute_plan,
    plan_fully_cached,
    render_node_sql,
    resolve_table_bindings,
    warm_plan_cache,
)
from .specmodel import VizSpec, parse_spec
from .stats import NetworkProfile, Stats
from .table import Table


def _inline_csv(ds) -> str:
    from .specmodel import infer_inline_schema

    schema, rows = infer_inline_schema(ds.values, ds.path)
    return Table.from_rows(schema, rows).to_csv()


class Session:
    def __init__(
        self,
        spec: VizSpec | str,
        driver,
        config: Config | None = None,
        net: NetworkProfile | None = None,
        bindings: dict | None = None,
        compare_baseline: bool = False,
        cache: ResultCache | None = None,
        session_id: str | None = None,
    ):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config or Config()
        self.driver = driver
        self.net = net or self.config.network.profile()
        self.bindings = dict(bindings or {})
        self.lock = threading.Lock()
        self.created = time.monotonic()
        self.last_used = self.created

        if isinstance(spec, str):
            spec = self._parse_with_driver_schemas(spec)
        self.spec = spec
        self._ingest_inline_sources()
        self.graph = build_dataflow(spec)
        self.tables = resolve_table_bindings(self.graph, self.bindings)
        self.stats = self._collect_stats()
        self.signals = dict(spec.initial_signals())

        cost = self.config.cost
        self.static_plan = choose_partition(self.graph, self.stats, self.net, driver.dialect, cost, self.signals)
        self.baseline = baseline_plan(self.graph, self.stats, self.net, cost, self.signals)
        self.candidates = candidate_plans_for_interactions(
            self.graph, self.stats, self.net, driver.dialect, cost, self.signals, static_plan=self.static_plan
        )
        self.custom_plan: PartitionPlan | None = None
        self.overrides: dict[int, str] = {}

        self.cache = cache if cache is not None else ResultCache(self.config.cache.budget_bytes)
        self.state = RuntimeState()
        self.predictor = InteractionPredictor(
            signals=list(spec.signals),
            alpha=self.config.cache.decay,
            neighbors=self.config.cache.slider_neighbors,
            top_k=self.config.cache.top_k,
        )
        self.prefetcher = Prefetcher(self._prefetch_one)
        self.timings: list = []
        self._seq = 0

        if compare_baseline:
            self.run_plan(self.baseline)
        self.run_plan(self.static_plan)
        self.prefetcher.plan(self.predictor.predict())

    # -- startup helpers -----------------------------------------------------

    def _parse_with_driver_schemas(self, spec_json: str) -> VizSpec:
        table_schemas: dict[str, list] = {}
        try:
            doc = json.loads(spec_json)
        except json.JSONDecodeError:
            doc = None
        if isinstance(doc, dict):
            for entry in doc.get("data", []) or []:
                if not isinstance(entry, dict):
                    continue
                ref = entry.get("table") or entry.get("file")
                if not isinstance(ref, str):
                    continue
                physical = self.bindings.get(entry.get("name")) or ref
                known = self.driver.table_names()
                if physical not in known:
                    raise UnknownDatasetError(
                        f"dataset {entry.get('name')!r} references table {physical!r}, which is not ingested"
                    )
                table_schemas[ref] = self.driver.table_schema(physical)
        return parse_spec(spec_json, table_schemas)

    def _ingest_inline_sources(self):
        for ds in self.spec.datasets:
            if ds.values is not None:
                physical = self.bindings.get(ds.name, ds.name)
                self.driver.ingest(physical, _inline_csv(ds))
                self.bindings[ds.name] = physical

    def _collect_stats(self) -> Stats:
        tables = {}
        for ds in self.spec.datasets:
            if ds.is_derived:
                continue
            tables[ds.name] = self.driver.table_stats(self.tables[ds.name])
        return Stats(tables=tables, default_selectivity=self.config.cost.default_selectivity)

    # -- plan execution -------------------------------------------------------

    @property
    def active_plan(self) -> PartitionPlan:
        return self.custom_plan or self.static_plan

    def _record(self, timing):
        self._seq += 1
        timing.seq = self._seq
        self.timings.append(timing)
        return timing

    def run_plan(self, plan: PartitionPlan, changed_signal: str | None = None, label: str | None = None):
        sinks, timing = execute_plan(
            plan,
            self.graph,
            self.driver,
            signals=self.signals,
            cache=self.cache,
            bindings=self.bindings,
            state=self.state,
            changed_signal=changed_signal,
            label=label,
        )
        return sinks, self._record(timing)

    # -- interactions ----------------------------------------------------------

    def _validate_signal(self, name: str, value):
        try:
            sd = self.spec.signal(name)
        except KeyError:
            raise UnknownSignalError(f"unknown signal {name!r}") from None
        if isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not sd.in_domain(value):
            raise SignalDomainError(f"value {value!r} is outside the domain of signal {name!r}")
        return value

    def _choose_interaction_plan(self, name: str, value) -> PartitionPlan:
        if self.custom_plan is not None:
            return self.custom_plan
        cand = self.candidates.get(name)
        if cand is None:
            return self.static_plan
        hypothetical = dict(self.signals)
        hypothetical[name] = value
        if plan_fully_cached(cand, self.graph, self.cache, self.driver, self.bindings, hypothetical):
            return cand
        if cand.est.total_ms <= self.static_plan.est.total_ms:
            return cand
        return self.static_plan

    def handle_interaction(self, name: str, value):
        """Serve one signal change; returns (sinks, timing, plan label)."""
        value = self._validate_signal(name, value)
        self.prefetcher.interrupt()
        plan = self._choose_interaction_plan(name, value)
        self.signals[name] = value
        self.predictor.record(name, value)
        sinks, timing = self.run_plan(plan, changed_signal=name)
        self.prefetcher.plan(self.predictor.predict())
        return sinks, timing, plan.label

    # -- prefetching -----------------------------------------------------------

    def _prefetch_one(self, name: str, value):
        plan = self.custom_plan or self.candidates.get(name) or self.static_plan
        if plan is not self.custom_plan and plan is not self.static_plan:
            # candidate exists; apply the same estimate-based fallback the
            # interaction path uses, so prefetched keys match served keys
            if plan.est.total_ms > self.static_plan.est.total_ms:
                plan = self.static_plan
        hypothetical = dict(self.signals)
        hypothetical[name] = value
        warm_plan_cache(plan, self.graph, self.driver, self.cache, self.bindings, hypothetical)

    def prefetch_now(self, max_tasks: int | None = None) -> int:
        """Run queued prefetch tasks synchronously (the idle path)."""
        return self.prefetcher.run_pending(max_tasks)

    # -- overrides and inspection ----------------------------------------------

    def set_override(self, node_id: int, side: str):
        """Apply the user's accumulated overrides on top of the recommended
        plan (later toggles win). Toggling everything back to the
        recommendation drops the custom plan entirely, so a toggle round
        trip restores the recommended plan."""
        attempt = {**self.overrides, node_id: side}
        plan = self.static_plan
        for nid, s in attempt.items():
            plan = apply_override(
                plan, self.graph, nid, s, self.stats, self.net, self.driver.dialect, self.config.cost, self.signals
            )
        if plan.assignment == self.static_plan.assignment:
            self.overrides = {}
            self.custom_plan = None
            plan = self.static_plan
        else:
            self.overrides = attempt
            self.custom_plan = plan
        sinks, timing = self.run_plan(plan)
        return sinks, timing

    def plan_json(self, plan: PartitionPlan | None = None) -> dict:
        plan = plan or self.active_plan
        sql = render_node_sql(self.graph, plan, self.signals, self.driver.dialect, self.bindings)
        return plan_to_json(plan, self.graph, sql)

    def candidates_json(self) -> dict:
        return {name: plan_to_json(plan, self.graph) for name, plan in self.candidates.items()}

    def dataset_table(self, name: str) -> Table:
        if name not in self.graph.terminal:
            raise UnknownDatasetError(f"unknown dataset {name!r}")
        out = self.graph.nodes[self.graph.terminal[name]].output
        if out is not None:
            return out
        # not materialized on the client under the current plan: fetch it
        from .runtime import _chain_query  # local import; internal helper
        from .sql.render import render_sql

        schemas = {ds.name: ds.schema for ds in self.spec.datasets if not ds.is_derived}
        q, _ = _chain_query(
            self.graph, self.graph.terminal[name], self.graph.signal_values, self.driver.dialect, self.tables, schemas
        )
        node = self.graph.nodes[self.graph.terminal[name]]
        return self.driver.execute(render_sql(q, self.driver.dialect), node.out_schema)

    def sink_tables(self) -> dict:
        return self.graph.sink_tables()

    def touch(self):
        self.last_used = time.monotonic()
