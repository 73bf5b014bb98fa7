"""Reactive dataflow graph: construction and (re-)evaluation.

One scan node per base dataset, one node per transform in pipeline order,
one signal node per declared signal and per extent-published signal. Data
edges follow the row stream: extent observes its input and publishes a
signal, so the transform after an extent keeps consuming extent's input.
Parameter edges run from signal nodes into the transforms referencing them;
publish edges run from extent nodes into their output signal nodes. Partial
re-evaluation recomputes exactly the downstream closure over the combined
edge sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CycleError, EvalError, UnknownSignalError
from .specmodel import ROW_STREAM_KINDS, VizSpec
from .table import Table
from .transforms import apply_transform_full

SERVER = "Server"
CLIENT = "Client"


@dataclass
class OperatorNode:
    id: int
    kind: str  # 'scan' | transform kind | 'signal'
    dataset: str | None = None  # dataset whose pipeline this node belongs to
    name: str | None = None  # signal name for signal nodes
    params: dict = field(default_factory=dict)
    pipeline_pos: int = 0  # 0 for scan, 1-based position for transforms
    dirty: bool = False
    eval_count: int = 0
    output: Table | None = None
    out_schema: list | None = None


@dataclass
class Pulse:
    changed: set[int]
    outputs: dict[str, Table]
    changed_datasets: set[str] = field(default_factory=set)
    dropped: dict[int, int] = field(default_factory=dict)
    signals: dict[str, object] = field(default_factory=dict)


class DataflowGraph:
    def __init__(self, spec: VizSpec):
        self.spec = spec
        self.nodes: dict[int, OperatorNode] = {}
        self.edges: list[tuple[int, int]] = []  # data edges
        self.param_edges: list[tuple[int, int]] = []  # signal -> consumer
        self.publish_edges: list[tuple[int, int]] = []  # extent -> signal
        self.sources: list[int] = []
        self.sinks: list[int] = []
        self.terminal: dict[str, int] = {}  # dataset -> last row-stream node
        self.signal_nodes: dict[str, int] = {}
        self.pipelines: dict[str, list[int]] = {}  # dataset -> transform node ids
        self.scan_for: dict[str, int] = {}  # base dataset -> scan node id
        self.signal_values: dict[str, object] = {}
        self.data_pred: dict[int, int] = {}
        self._evaluated = False
        self._build()

    # -- construction ------------------------------------------------------

    def _new_node(self, **kw) -> OperatorNode:
        node = OperatorNode(id=len(self.nodes), **kw)
        self.nodes[node.id] = node
        return node

    def _build(self):
        spec = self.spec
        for s in spec.signals:
            node = self._new_node(kind="signal", name=s.name)
            self.signal_nodes[s.name] = node.id
        for name, stype in spec.signal_types.items():
            if stype == "extent" and name not in self.signal_nodes:
                node = self._new_node(kind="signal", name=name)
                self.signal_nodes[name] = node.id

        for ds in spec.datasets:
            stages = spec.stage_schemas[ds.name]
            if ds.is_derived:
                cursor = self.terminal[ds.source]
            else:
                scan = self._new_node(kind="scan", dataset=ds.name, out_schema=stages[0])
                self.sources.append(scan.id)
                self.scan_for[ds.name] = scan.id
                cursor = scan.id
            pipeline: list[int] = []
            for pos, t in enumerate(ds.transforms, start=1):
                node = self._new_node(
                    kind=t.kind,
                    dataset=ds.name,
                    params=t.params,
                    pipeline_pos=pos,
                    out_schema=stages[pos] if t.kind in ROW_STREAM_KINDS else [("min", "number"), ("max", "number")],
                )
                self.edges.append((cursor, node.id))
                self.data_pred[node.id] = cursor
                pipeline.append(node.id)
                if t.kind == "extent":
                    self.publish_edges.append((node.id, self.signal_nodes[t.params["signal"]]))
                else:
                    cursor = node.id
                for ref in t.signal_refs():
                    self.param_edges.append((self.signal_nodes[ref], node.id))
            self.pipelines[ds.name] = pipeline
            self.terminal[ds.name] = cursor

        sink_datasets = {m.source for m in spec.marks}
        self.sinks = sorted({self.terminal[d] for d in sink_datasets})
        self.topo_order = self._toposort()

    def _adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {nid: [] for nid in self.nodes}
        for u, v in self.edges + self.param_edges + self.publish_edges:
            adj[u].append(v)
        return adj

    def _toposort(self) -> list[int]:
        adj = self._adjacency()
        indeg = {nid: 0 for nid in self.nodes}
        for u, vs in adj.items():
            for v in vs:
                indeg[v] += 1
        ready = sorted(nid for nid, d in indeg.items() if d == 0)
        order: list[int] = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for v in sorted(adj[nid]):
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
            ready.sort()
        if len(order) != len(self.nodes):
            cyclic = sorted(nid for nid, d in indeg.items() if d > 0)
            raise CycleError(cyclic)
        return order

    # -- queries -----------------------------------------------------------

    def operator_ids(self) -> list[int]:
        return [nid for nid in self.topo_order if self.nodes[nid].kind != "signal"]

    def downstream_closure(self, start: int) -> set[int]:
        """Operator nodes reachable from ``start`` over all edge kinds
        (the start node itself is excluded)."""
        adj = self._adjacency()
        seen: set[int] = set()
        stack = list(adj[start])
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(adj[nid])
        return {nid for nid in seen if self.nodes[nid].kind != "signal"}

    def dataset_of_nodes(self, node_ids: set[int]) -> set[str]:
        return {
            name
            for name, term in self.terminal.items()
            if term in node_ids
        }

    def signal_consumers(self, name: str) -> list[int]:
        sig = self.signal_nodes[name]
        return [v for u, v in self.param_edges if u == sig]

    # -- evaluation --------------------------------------------------------

    def _eval_node(self, node: OperatorNode, pulse: Pulse):
        if node.kind == "scan":
            if node.output is None:
                raise EvalError(f"no input table bound for scan of {node.dataset!r}", node.id)
            node.eval_count += 1
            node.dirty = False
            return
        pred = self.nodes[self.data_pred[node.id]]
        if pred.output is None:
            raise EvalError("predecessor has no output", node.id)
        try:
            result = apply_transform_full(node.kind, node.params, pred.output, self.signal_values)
        except EvalError as exc:
            raise EvalError(str(exc), node.id) from exc
        if node.kind == "extent":
            name, pair = result.signal
            self.signal_values[name] = list(pair)
            pulse.signals[name] = list(pair)
            node.output = result.table
        else:
            node.output = result.table
        if result.dropped:
            pulse.dropped[node.id] = result.dropped
        node.eval_count += 1
        node.dirty = False

    def _collect_outputs(self, pulse: Pulse):
        for name, term in self.terminal.items():
            out = self.nodes[term].output
            if out is not None:
                pulse.outputs[name] = out

    def eval_full(self, inputs: dict[str, Table], signals: dict[str, object] | None = None) -> Pulse:
        """Evaluate every node once in topological order."""
        self.signal_values = dict(self.spec.initial_signals())
        if signals:
            self.signal_values.update(signals)
        for name, nid in self.signal_nodes.items():
            self.nodes[nid].output = None
        for ds, scan_id in self.scan_for.items():
            if ds in inputs:
                self.nodes[scan_id].output = inputs[ds]
                continue
            source = self.spec.dataset(ds)
            if source.values is not None:
                from .specmodel import infer_inline_schema

                schema, rows = infer_inline_schema(source.values, source.path)
                self.nodes[scan_id].output = Table.from_rows(schema, rows)
            else:
                raise EvalError(f"missing input table for dataset {ds!r}", scan_id)
        pulse = Pulse(changed=set(), outputs={})
        for nid in self.topo_order:
            node = self.nodes[nid]
            if node.kind == "signal":
                continue
            self._eval_node(node, pulse)
            pulse.changed.add(nid)
        self._collect_outputs(pulse)
        pulse.changed_datasets = set(self.terminal)
        self._evaluated = True
        return pulse

    def eval_partial(self, changed_signal: str, value) -> Pulse:
        """Re-evaluate exactly the downstream closure of one signal."""
        if not self._evaluated:
            raise EvalError("eval_partial requires a prior eval_full")
        if changed_signal not in self.signal_nodes:
            raise UnknownSignalError(f"unknown signal {changed_signal!r}")
        self.signal_values[changed_signal] = value
        closure = self.downstream_closure(self.signal_nodes[changed_signal])
        return self.eval_subset(closure)

    def eval_subset(self, node_ids: set[int]) -> Pulse:
        """Re-evaluate the given operator nodes in topological order."""
        pulse = Pulse(changed=set(), outputs={})
        for nid in self.topo_order:
            if nid not in node_ids:
                continue
            node = self.nodes[nid]
            if node.kind == "signal":
                continue
            self._eval_node(node, pulse)
            pulse.changed.add(nid)
        self._collect_outputs(pulse)
        pulse.changed_datasets = self.dataset_of_nodes(pulse.changed)
        return pulse

    def sink_tables(self) -> dict[str, Table]:
        out = {}
        for m in self.spec.marks:
            t = self.nodes[self.terminal[m.source]].output
            if t is not None:
                out[m.source] = t
        return out


def build_dataflow(spec: VizSpec) -> DataflowGraph:
    """Construct the reactive graph for a validated spec."""
    return DataflowGraph(spec)


def eval_full(g: DataflowGraph, inputs: dict[str, Table], signals: dict[str, object] | None = None) -> Pulse:
    return g.eval_full(inputs, signals)


def eval_partial(g: DataflowGraph, changed_signal: str, value) -> Pulse:
    return g.eval_partial(changed_signal, value)
