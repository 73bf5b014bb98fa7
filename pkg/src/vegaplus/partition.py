"""Cost-based partitioning of the dataflow between client and server.

A valid plan is one cut position per pipeline: the first ``cut`` transforms
of a dataset run on the server, the rest on the client. Scans always run on
the server (the all-client baseline still scans there, cutting immediately
after the scan). A derived pipeline can only keep server-side work while its
parent pipeline is entirely server-side. Pipelines are linear, so exhaustive
enumeration of cut positions is exact and cheap.

Transfer cost is charged once per distinct frontier producer (a fan-out of
one dataset to several client consumers ships its rows once), plus one
delivery per mark-feeding terminal that sits on the server.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .dataflow import CLIENT, SERVER, DataflowGraph, OperatorNode
from .errors import OverrideRejected
from .stats import NetworkProfile, Stats
from .transforms import resolve_param


@dataclass
class CostConfig:
    server_coeff: dict = field(
        default_factory=lambda: {
            "scan": 0.0002,
            "filter": 0.0002,
            "formula": 0.0002,
            "project": 0.0002,
            "collect": 0.0002,
            "bin": 0.0004,
            "stack": 0.0004,
            "aggregate": 0.0006,
            "extent": 0.0006,
        }
    )
    client_factor: float = 3.0  # client is kappa x slower than the columnar server
    default_selectivity: float = 0.5
    string_width: float = 16.0
    number_width: float = 8.0

    def coeff(self, kind: str, side: str) -> float:
        c = self.server_coeff.get(kind, 0.0002)
        return c * self.client_factor if side == CLIENT else c


@dataclass
class EdgeEstimate:
    producer: int
    consumer: int | None  # None = delivery to the mark renderer
    rows: float
    bytes: float
    ms: float


@dataclass
class CostEstimate:
    server_ms: float
    transfer_ms: float
    client_ms: float
    total_ms: float
    edges: list[EdgeEstimate] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "server_ms": self.server_ms,
            "transfer_ms": self.transfer_ms,
            "client_ms": self.client_ms,
            "total_ms": self.total_ms,
        }


@dataclass
class PartitionPlan:
    cuts: dict  # dataset -> number of its transforms on the server
    assignment: dict  # node id -> side
    cut_edges: list  # (producer id, consumer id or None)
    est: CostEstimate
    label: str = "recommended"

    def side(self, node_id: int) -> str:
        return self.assignment[node_id]

    def server_nodes(self) -> set[int]:
        return {nid for nid, s in self.assignment.items() if s == SERVER}


# ---------------------------------------------------------------------------
# Cardinality and width estimation


def estimate_cardinality(
    node: OperatorNode,
    input_rows: float,
    stats: Stats,
    signals: dict,
    graph: DataflowGraph | None = None,
) -> float:
    """Estimated output rows of one operator given its input size."""
    if input_rows < 0:
        raise ValueError("input_rows must be >= 0")
    kind = node.kind
    if kind in ("formula", "bin", "collect", "project", "stack", "scan"):
        return input_rows
    if kind == "filter":
        return input_rows * stats.default_selectivity
    if kind == "extent":
        return 1.0
    if kind == "aggregate":
        bound = input_rows
        product = 1.0
        base = _base_stats(stats, graph, node)
        for fld in node.params["groupby"]:
            if fld in ("bin0", "bin1"):
                cap = _bin_cap(node, signals, graph)
                product *= cap if cap is not None else input_rows
            elif base is not None and fld in base.fields:
                product *= max(base.fields[fld].distinct, 1.0)
            else:
                product *= max(input_rows, 1.0)
            if product >= bound:
                return bound
        if not node.params["groupby"]:
            return 1.0
        return min(bound, product)
    return input_rows


def _base_dataset(graph: DataflowGraph | None, node: OperatorNode) -> str | None:
    if graph is None or node.dataset is None:
        return None
    name = node.dataset
    spec = graph.spec
    while True:
        ds = spec.dataset(name)
        if not ds.is_derived:
            return name
        name = ds.source


def _base_stats(stats: Stats, graph: DataflowGraph | None, node: OperatorNode):
    base = _base_dataset(graph, node)
    if base is None or base not in stats.tables:
        return None
    return stats.tables[base]


def _bin_cap(node: OperatorNode, signals: dict, graph: DataflowGraph | None) -> float | None:
    """Upper bound on distinct bin0 values from the upstream bin's maxbins."""
    if graph is None:
        return None
    nid = node.id
    while nid in graph.data_pred:
        nid = graph.data_pred[nid]
        up = graph.nodes[nid]
        if up.kind == "bin":
            # the nicing rule keeps distinct bins within maxbins regardless
            # of the (possibly not-yet-computed) extent
            try:
                maxbins = resolve_param(up.params["maxbins"], signals)
            except Exception:
                return None
            if isinstance(maxbins, (int, float)) and not isinstance(maxbins, bool):
                return max(1.0, float(maxbins))
            return None
    return None


class _PlanContext:
    """Per-(graph, stats, signals) cardinalities and widths, shared across
    the plans enumerated by choose_partition."""

    def __init__(self, g: DataflowGraph, stats: Stats, net: NetworkProfile, cfg: CostConfig, signals: dict):
        self.g = g
        self.stats = stats
        self.net = net
        self.cfg = cfg
        self.signals = signals
        self.rows: dict[int, float] = {}
        self.in_rows: dict[int, float] = {}
        self._propagate()
        self.sink_terminals = self._sink_terminals()

    def _propagate(self):
        g = self.g
        for nid in g.topo_order:
            node = g.nodes[nid]
            if node.kind == "signal":
                continue
            if node.kind == "scan":
                ts = self.stats.tables.get(node.dataset)
                rows = float(ts.row_count) if ts else 0.0
                self.in_rows[nid] = rows
                self.rows[nid] = rows
                continue
            pred_rows = self.rows[g.data_pred[nid]]
            self.in_rows[nid] = pred_rows
            self.rows[nid] = estimate_cardinality(node, pred_rows, self.stats, self.signals, g)

    def _sink_terminals(self) -> set[int]:
        marks = {m.source for m in self.g.spec.marks}
        if not marks:
            marks = set(self.g.terminal)
        return {self.g.terminal[d] for d in marks}

    def row_width(self, node: OperatorNode) -> float:
        schema = node.out_schema or []
        base = _base_stats(self.stats, self.g, node)
        width = 1.0
        for fname, ftype in schema:
            if base is not None and fname in base.fields:
                width += base.fields[fname].mean_width + 1
            elif ftype == "string":
                width += self.cfg.string_width + 1
            else:
                width += self.cfg.number_width + 1
        return width

    def estimate(self, cuts: dict, assignment: dict) -> CostEstimate:
        g = self.g
        server_ms = 0.0
        client_ms = 0.0
        for nid, side in assignment.items():
            node = g.nodes[nid]
            server_or_client = self.cfg.coeff(node.kind, side) * self.in_rows[nid]
            if side == SERVER:
                server_ms += server_or_client
            else:
                client_ms += server_or_client

        frontier: dict[int, list[int | None]] = {}
        for u, v in g.edges:
            if assignment.get(u) == SERVER and assignment.get(v) == CLIENT:
                frontier.setdefault(u, []).append(v)
        for term in self.sink_terminals:
            if assignment.get(term) == SERVER:
                frontier.setdefault(term, []).append(None)

        transfer_ms = 0.0
        edges: list[EdgeEstimate] = []
        for u, consumers in sorted(frontier.items()):
            node = g.nodes[u]
            rows = self.rows[u]
            nbytes = rows * self.row_width(node)
            ms = self.net.transfer_ms(nbytes)
            transfer_ms += ms
            for v in consumers:
                edges.append(EdgeEstimate(producer=u, consumer=v, rows=rows, bytes=nbytes, ms=ms))
        return CostEstimate(
            server_ms=server_ms,
            transfer_ms=transfer_ms,
            client_ms=client_ms,
            total_ms=server_ms + transfer_ms + client_ms,
            edges=edges,
        )


# ---------------------------------------------------------------------------
# Plan construction from per-pipeline cut positions


def assignment_from_cuts(g: DataflowGraph, cuts: dict) -> dict:
    assignment: dict[int, str] = {}
    for nid in g.scan_for.values():
        assignment[nid] = SERVER
    for ds, pipeline in g.pipelines.items():
        cut = cuts.get(ds, 0)
        for pos, nid in enumerate(pipeline, start=1):
            assignment[nid] = SERVER if pos <= cut else CLIENT
    return assignment


def cut_edges_of(g: DataflowGraph, assignment: dict, sink_terminals: set[int]) -> list:
    out = []
    for u, v in g.edges:
        if assignment.get(u) == SERVER and assignment.get(v) == CLIENT:
            out.append((u, v))
    for term in sorted(sink_terminals):
        if assignment.get(term) == SERVER:
            out.append((term, None))
    return out


def max_supported_cut(g: DataflowGraph, dataset: str, dialect) -> int:
    """Longest server prefix of a pipeline the dialect can express."""
    pipeline = g.pipelines[dataset]
    for pos, nid in enumerate(pipeline, start=1):
        kind = g.nodes[nid].kind
        if kind == "stack" and not dialect.supports_windows:
            return pos - 1
    return len(pipeline)


def repair_cuts(g: DataflowGraph, cuts: dict, dialect) -> dict:
    """Clamp cuts to dialect capability and parent-pipeline closure."""
    out = {}
    for ds in g.pipelines:  # spec order: parents precede derived datasets
        cut = max(0, min(cuts.get(ds, 0), max_supported_cut(g, ds, dialect)))
        src = g.spec.dataset(ds).source
        if src is not None and cut > 0:
            if out.get(src, 0) < len(g.pipelines[src]):
                cut = 0
        out[ds] = cut
    return out


def _plan_from_cuts(ctx: _PlanContext, cuts: dict, label: str) -> PartitionPlan:
    assignment = assignment_from_cuts(ctx.g, cuts)
    est = ctx.estimate(cuts, assignment)
    return PartitionPlan(
        cuts=dict(cuts),
        assignment=assignment,
        cut_edges=cut_edges_of(ctx.g, assignment, ctx.sink_terminals),
        est=est,
        label=label,
    )


def _enumerate_cuts(g: DataflowGraph, dialect):
    names = list(g.pipelines)
    ranges = [range(0, max_supported_cut(g, ds, dialect) + 1) for ds in names]
    for combo in itertools.product(*ranges):
        cuts = dict(zip(names, combo))
        ok = True
        for ds, cut in cuts.items():
            src = g.spec.dataset(ds).source
            if src is not None and cut > 0 and cuts.get(src, 0) < len(g.pipelines[src]):
                ok = False
                break
        if ok:
            yield cuts


def make_context(g: DataflowGraph, stats: Stats, net: NetworkProfile, cfg: CostConfig | None = None, signals: dict | None = None) -> _PlanContext:
    return _PlanContext(g, stats, net, cfg or CostConfig(), signals if signals is not None else g.spec.initial_signals())


def estimate_cost(
    plan: PartitionPlan,
    g: DataflowGraph,
    stats: Stats,
    net: NetworkProfile,
    cfg: CostConfig | None = None,
    signals: dict | None = None,
) -> CostEstimate:
    ctx = make_context(g, stats, net, cfg, signals)
    return ctx.estimate(plan.cuts, plan.assignment)


def choose_partition(
    g: DataflowGraph,
    stats: Stats,
    net: NetworkProfile,
    dialect,
    cfg: CostConfig | None = None,
    signals: dict | None = None,
) -> PartitionPlan:
    """Minimum-estimated-latency plan over all valid cut combinations.

    Ties break toward more server nodes (less client memory)."""
    ctx = make_context(g, stats, net, cfg, signals)
    best: PartitionPlan | None = None
    best_key = None
    for cuts in _enumerate_cuts(g, dialect):
        plan = _plan_from_cuts(ctx, cuts, "recommended")
        n_server = sum(1 for s in plan.assignment.values() if s == SERVER)
        key = (plan.est.total_ms, -n_server, tuple(sorted(cuts.items())))
        if best_key is None or key < best_key:
            best, best_key = plan, key
    assert best is not None  # the all-client baseline always enumerates
    return best


def baseline_plan(
    g: DataflowGraph,
    stats: Stats,
    net: NetworkProfile,
    cfg: CostConfig | None = None,
    signals: dict | None = None,
) -> PartitionPlan:
    """The all-client comparison plan: scan on the server, cut right after."""
    ctx = make_context(g, stats, net, cfg, signals)
    return _plan_from_cuts(ctx, {ds: 0 for ds in g.pipelines}, "baseline")


def candidate_plans_for_interactions(
    g: DataflowGraph,
    stats: Stats,
    net: NetworkProfile,
    dialect,
    cfg: CostConfig | None = None,
    signals: dict | None = None,
    static_plan: PartitionPlan | None = None,
) -> dict:
    """Per bound signal: a plan cutting immediately upstream of the first
    operator depending on it, so the interaction re-evaluates client-side
    once the cut data is cached."""
    ctx = make_context(g, stats, net, cfg, signals)
    if static_plan is None:
        static_plan = choose_partition(g, stats, net, dialect, cfg, signals)
    out: dict[str, PartitionPlan] = {}
    for sig in g.spec.signals:
        if sig.bind is None:
            continue
        consumers = g.signal_consumers(sig.name)
        if not consumers:
            out[sig.name] = static_plan
            continue
        cuts = dict(static_plan.cuts)
        for ds, pipeline in g.pipelines.items():
            positions = [pos for pos, nid in enumerate(pipeline, start=1) if nid in consumers]
            if positions:
                cuts[ds] = min(positions) - 1
        cuts = repair_cuts(g, cuts, dialect)
        out[sig.name] = _plan_from_cuts(ctx, cuts, "recommended")
    return out


def apply_override(
    plan: PartitionPlan,
    g: DataflowGraph,
    node_id: int,
    side: str,
    stats: Stats,
    net: NetworkProfile,
    dialect,
    cfg: CostConfig | None = None,
    signals: dict | None = None,
) -> PartitionPlan:
    """Toggle one operator's side, minimally repairing pipeline closure."""
    if node_id not in g.nodes:
        raise OverrideRejected(f"unknown node {node_id}")
    node = g.nodes[node_id]
    if node.kind == "signal":
        raise OverrideRejected("signals are not placeable operators")
    if side not in (SERVER, CLIENT):
        raise OverrideRejected(f"side must be {SERVER!r} or {CLIENT!r}")
    if node.kind == "scan":
        if side == CLIENT:
            raise OverrideRejected("the scan always runs on the server; raw data lives in the DBMS")
        return _plan_from_cuts(make_context(g, stats, net, cfg, signals), plan.cuts, "custom")

    ds = node.dataset
    pos = node.pipeline_pos
    cuts = dict(plan.cuts)
    if side == CLIENT:
        cuts[ds] = min(cuts.get(ds, 0), pos - 1)
        # pipeline no longer fully on the server: derived pipelines follow
        if cuts[ds] < len(g.pipelines[ds]):
            for other, pipeline in g.pipelines.items():
                if _descends_from(g, other, ds):
                    cuts[other] = 0
    else:
        supported = max_supported_cut(g, ds, dialect)
        if pos > supported:
            raise OverrideRejected(
                f"operator {g.nodes[node_id].kind!r} (or one upstream of it) is unsupported on dialect {dialect.name!r}"
            )
        cuts[ds] = max(cuts.get(ds, 0), pos)
        # upstream pipelines must be entirely server-side
        chain = g.spec.dataset(ds).source
        while chain is not None:
            need = len(g.pipelines[chain])
            if max_supported_cut(g, chain, dialect) < need:
                raise OverrideRejected(
                    f"upstream pipeline {chain!r} contains an operator unsupported on dialect {dialect.name!r}"
                )
            cuts[chain] = need
            chain = g.spec.dataset(chain).source
    repaired = repair_cuts(g, cuts, dialect)
    if side == SERVER and repaired.get(ds, 0) < pos:
        raise OverrideRejected("override cannot be honored while keeping a valid plan")
    return _plan_from_cuts(make_context(g, stats, net, cfg, signals), repaired, "custom")


def _descends_from(g: DataflowGraph, dataset: str, ancestor: str) -> bool:
    cur = g.spec.dataset(dataset).source
    while cur is not None:
        if cur == ancestor:
            return True
        cur = g.spec.dataset(cur).source
    return False


# ---------------------------------------------------------------------------
# Plan JSON (consumed by the dashboard)


def plan_to_json(plan: PartitionPlan, g: DataflowGraph, node_sql: dict | None = None) -> dict:
    node_sql = node_sql or {}
    nodes = []
    for nid in g.topo_order:
        node = g.nodes[nid]
        if node.kind == "signal":
            entry = {"id": nid, "kind": "signal", "side": CLIENT, "name": node.name}
        else:
            entry = {"id": nid, "kind": node.kind, "side": plan.assignment.get(nid, CLIENT)}
            if node.dataset is not None:
                entry["dataset"] = node.dataset
            if nid in node_sql:
                entry["sql"] = node_sql[nid]
        nodes.append(entry)
    edges = [{"from": u, "to": v, "kind": "data"} for u, v in g.edges]
    edges += [{"from": u, "to": v, "kind": "param"} for u, v in g.param_edges]
    edges += [{"from": u, "to": v, "kind": "publish"} for u, v in g.publish_edges]
    return {
        "label": plan.label,
        "nodes": nodes,
        "edges": edges,
        "cut_edges": [{"from": u, "to": v} for u, v in plan.cut_edges],
        "estimate": plan.est.to_json(),
    }
