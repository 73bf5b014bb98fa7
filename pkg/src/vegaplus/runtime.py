"""Hybrid plan execution: merged server queries feed the client interpreter.

The executor walks the graph in topological order. Server-side extents run
as small side queries (publishing their signal pair before anything that
references it renders SQL); the output of each server frontier producer is
fetched once per distinct producer through the result cache; client-side
operators evaluate in-process. Because signal dependencies are graph edges
and the combined graph is acyclic, every signal a query needs is published
before that query renders.

Re-executions keep per-node state: a frontier whose canonical key is
unchanged is not refetched, and only operators downstream of a changed
signal re-evaluate, so a warm interaction issues zero driver calls.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .cache import ResultCache, canonical_key
from .dataflow import CLIENT, SERVER, DataflowGraph, Pulse
from .errors import EvalError
from .partition import PartitionPlan
from .sql.render import render_sql
from .sql.rewrite import rewrite
from .sql.translate import merge_region, translate_operator
from .table import Table

_SEQ = 0


@dataclass
class TimingBreakdown:
    label: str  # baseline | recommended | custom
    server_ms: float
    network_ms: float
    client_ms: float
    seq: int = 0

    @property
    def total_ms(self) -> float:
        return self.server_ms + self.network_ms + self.client_ms

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "label": self.label,
            "server_ms": self.server_ms,
            "network_ms": self.network_ms,
            "client_ms": self.client_ms,
            "total_ms": self.total_ms,
        }


@dataclass
class RuntimeState:
    """Per-session memory of the last execution, enabling warm paths."""

    plan: PartitionPlan | None = None
    frontier_keys: dict = field(default_factory=dict)  # node id -> cache key
    extent_keys: dict = field(default_factory=dict)


def resolve_table_bindings(g: DataflowGraph, bindings: dict | None) -> dict:
    """Dataset name -> physical table, for base datasets."""
    bindings = bindings or {}
    out = {}
    for ds in g.spec.datasets:
        if ds.is_derived:
            continue
        out[ds.name] = bindings.get(ds.name) or ds.table or ds.name
    return out


def server_chain(g: DataflowGraph, node_id: int) -> tuple[str, list]:
    """(base dataset, row-stream chain) from the scan to ``node_id``."""
    chain = []
    nid = node_id
    while True:
        node = g.nodes[nid]
        if node.kind == "scan":
            return node.dataset, list(reversed(chain))
        if node.kind != "extent":
            chain.append(node)
        elif nid == node_id:
            pass  # an extent endpoint contributes its own side aggregation
        nid = g.data_pred[nid]


def _chain_query(g: DataflowGraph, node_id: int, signals: dict, dialect, tables: dict, schemas: dict):
    base_ds, chain = server_chain(g, node_id)
    table = tables[base_ds]
    base_schema = schemas[base_ds]
    q = merge_region(chain, table, base_schema, signals, dialect)
    node = g.nodes[node_id]
    if node.kind == "extent":
        q = translate_operator("extent", node.params, q, signals, dialect)
    return rewrite(q), base_ds


def render_node_sql(g: DataflowGraph, plan: PartitionPlan, signals: dict, dialect, bindings: dict | None = None) -> dict:
    """Per-server-node rewritten SQL (the dashboard's tooltip payload)."""
    tables = resolve_table_bindings(g, bindings)
    schemas = {ds.name: ds.schema for ds in g.spec.datasets if not ds.is_derived}
    merged = dict(g.spec.initial_signals())
    merged.update(g.signal_values or {})  # extent publications from the last run
    merged.update(signals)
    out = {}
    for nid, side in plan.assignment.items():
        if side != SERVER:
            continue
        node = g.nodes[nid]
        if node.kind == "signal":
            continue
        try:
            q, _base = _chain_query(g, nid, merged, dialect, tables, schemas)
            out[nid] = render_sql(q, dialect)
        except EvalError:
            # a signal value that is not yet known (extent not run); skip
            continue
    return out


def execute_plan(
    plan: PartitionPlan,
    g: DataflowGraph,
    driver,
    signals: dict | None = None,
    cache: ResultCache | None = None,
    bindings: dict | None = None,
    state: RuntimeState | None = None,
    changed_signal: str | None = None,
    label: str | None = None,
) -> tuple[dict, TimingBreakdown]:
    """Execute one plan end to end; returns (sink tables, timing).

    ``state`` carries warm-execution memory between calls; pass the same
    instance to enable cache-served, partially re-evaluated interactions.
    """
    global _SEQ
    cache = cache if cache is not None else ResultCache()
    state = state if state is not None else RuntimeState()
    dialect = driver.dialect
    tables = resolve_table_bindings(g, bindings)
    schemas = {ds.name: ds.schema for ds in g.spec.datasets if not ds.is_derived}
    table_hashes = {t: driver.content_hash(t) for t in tables.values()}

    merged_signals = dict(g.spec.initial_signals())
    if g.signal_values:
        # keep extent publications from previous rounds
        merged_signals.update(g.signal_values)
    if signals:
        merged_signals.update(signals)
    g.signal_values = merged_signals

    warm = state.plan is plan and changed_signal is not None
    if warm:
        dirty = g.downstream_closure(g.signal_nodes[changed_signal])
    else:
        dirty = set(g.operator_ids())
        state.frontier_keys = {}
        state.extent_keys = {}
    state.plan = plan

    driver.take_timings()
    client_ms = 0.0
    changed: set[int] = set()
    pulse = Pulse(changed=set(), outputs={})

    def fetch(node_id: int, key_store: dict) -> tuple[Table, bool]:
        """Resolve one server query through the cache; returns (table, changed)."""
        q, _base = _chain_query(g, node_id, g.signal_values, dialect, tables, schemas)
        sql = render_sql(q, dialect)
        key = canonical_key(table_hashes, sql)
        node = g.nodes[node_id]
        if key_store.get(node_id) == key and node.output is not None and node_id not in dirty:
            return node.output, False
        cached = cache.get(key)
        if cached is None:
            result = driver.execute(sql, node.out_schema)
            cache.put(key, result)
        else:
            result = cached
        key_store[node_id] = key
        return result, True

    sink_terminals = {g.terminal[m.source] for m in g.spec.marks} or set(g.terminal.values())

    for nid in g.topo_order:
        node = g.nodes[nid]
        if node.kind == "signal":
            continue
        side = plan.assignment.get(nid, CLIENT)
        if side == SERVER:
            if node.kind == "extent":
                table, was_changed = fetch(nid, state.extent_keys)
                if was_changed or node.output is None:
                    node.output = table
                    lo = table.cell("min", 0) if table.nrows else None
                    hi = table.cell("max", 0) if table.nrows else None
                    g.signal_values[node.params["signal"]] = [lo, hi]
                    changed.add(nid)
            elif nid in sink_terminals or any(
                plan.assignment.get(v, CLIENT) == CLIENT for u, v in g.edges if u == nid
            ):
                table, was_changed = fetch(nid, state.frontier_keys)
                if was_changed:
                    node.output = table
                    changed.add(nid)
            continue
        # client-side operator: evaluate when dirty or fed by a change
        pred = g.data_pred.get(nid)
        needs_eval = nid in dirty or (pred is not None and pred in changed) or node.output is None
        if node.kind == "scan":
            # a client-consumed scan is always a frontier producer, handled above
            continue
        if not needs_eval:
            continue
        t0 = time.perf_counter()
        g._eval_node(node, pulse)
        client_ms += (time.perf_counter() - t0) * 1000.0
        changed.add(nid)

    g._collect_outputs(pulse)
    g._evaluated = True
    pulse.changed = changed
    pulse.changed_datasets = g.dataset_of_nodes(changed)

    server_ms, network_ms = driver.take_timings()
    _SEQ += 1
    timing = TimingBreakdown(
        label=label or plan.label,
        server_ms=server_ms,
        network_ms=network_ms,
        client_ms=client_ms,
        seq=_SEQ,
    )
    sinks = {m.source: g.nodes[g.terminal[m.source]].output for m in g.spec.marks}
    if not sinks:
        sinks = {name: g.nodes[t].output for name, t in g.terminal.items()}
    return sinks, timing


def reference_sinks(g: DataflowGraph, inputs: dict, signals: dict | None = None) -> dict:
    """All-client oracle: full in-process evaluation of the same graph."""
    pulse = g.eval_full(inputs, signals)
    out = {m.source: pulse.outputs[m.source] for m in g.spec.marks}
    return out or dict(pulse.outputs)


def _server_work(plan: PartitionPlan, g: DataflowGraph):
    """(extent ids, frontier producer ids) of a plan, in topological order."""
    sink_terminals = {g.terminal[m.source] for m in g.spec.marks} or set(g.terminal.values())
    extents, frontiers = [], []
    for nid in g.topo_order:
        node = g.nodes[nid]
        if node.kind == "signal" or plan.assignment.get(nid) != SERVER:
            continue
        if node.kind == "extent":
            extents.append(nid)
        elif nid in sink_terminals or any(
            plan.assignment.get(v, CLIENT) == CLIENT for u, v in g.edges if u == nid
        ):
            frontiers.append(nid)
    return extents, frontiers


def warm_plan_cache(
    plan: PartitionPlan,
    g: DataflowGraph,
    driver,
    cache: ResultCache,
    bindings: dict | None,
    signals: dict,
) -> None:
    """Fetch every server query of a plan under hypothetical signal values
    into the cache, without touching graph state (the prefetch path)."""
    dialect = driver.dialect
    tables = resolve_table_bindings(g, bindings)
    schemas = {ds.name: ds.schema for ds in g.spec.datasets if not ds.is_derived}
    table_hashes = {t: driver.content_hash(t) for t in tables.values()}
    local = dict(g.spec.initial_signals())
    local.update(g.signal_values or {})
    local.update(signals)
    extents, frontiers = _server_work(plan, g)
    for nid in extents:
        q, _ = _chain_query(g, nid, local, dialect, tables, schemas)
        sql = render_sql(q, dialect)
        key = canonical_key(table_hashes, sql)
        table = cache.peek(key)
        if table is None:
            table = driver.execute(sql, g.nodes[nid].out_schema)
            cache.put(key, table)
        lo = table.cell("min", 0) if table.nrows else None
        hi = table.cell("max", 0) if table.nrows else None
        local[g.nodes[nid].params["signal"]] = [lo, hi]
    for nid in frontiers:
        q, _ = _chain_query(g, nid, local, dialect, tables, schemas)
        sql = render_sql(q, dialect)
        key = canonical_key(table_hashes, sql)
        if not cache.contains(key):
            cache.put(key, driver.execute(sql, g.nodes[nid].out_schema))


def plan_fully_cached(
    plan: PartitionPlan,
    g: DataflowGraph,
    cache: ResultCache,
    driver,
    bindings: dict | None,
    signals: dict,
) -> bool:
    """True when every server query the plan needs under these signal values
    is already cached (so serving it issues zero driver calls)."""
    dialect = driver.dialect
    tables = resolve_table_bindings(g, bindings)
    schemas = {ds.name: ds.schema for ds in g.spec.datasets if not ds.is_derived}
    table_hashes = {t: driver.content_hash(t) for t in tables.values()}
    local = dict(g.spec.initial_signals())
    local.update(g.signal_values or {})
    local.update(signals)
    extents, frontiers = _server_work(plan, g)
    try:
        for nid in extents:
            q, _ = _chain_query(g, nid, local, dialect, tables, schemas)
            key = canonical_key(table_hashes, render_sql(q, dialect))
            table = cache.peek(key)
            if table is None:
                return False
            lo = table.cell("min", 0) if table.nrows else None
            hi = table.cell("max", 0) if table.nrows else None
            local[g.nodes[nid].params["signal"]] = [lo, hi]
        for nid in frontiers:
            q, _ = _chain_query(g, nid, local, dialect, tables, schemas)
            if not cache.contains(canonical_key(table_hashes, render_sql(q, dialect))):
                return False
    except EvalError:
        return False
    return True
