/** Seeded generator of schema-valid plan documents for fuzzing, including
 * hostile-but-valid shapes: cycles, dangling edge endpoints, unknown kinds,
 * zero estimates. */

import type { CostEstimate, CutEdge, Plan, PlanEdge, PlanNode, Side } from "../src/types.js";

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const KINDS = ["scan", "filter", "formula", "extent", "bin", "aggregate", "collect", "stack", "project", "signal", "mystery"];
const LABELS: Plan["label"][] = ["baseline", "recommended", "custom"];

export function genPlan(rand: () => number): Plan {
  const n = 1 + Math.floor(rand() * 11);
  const pick = <T>(xs: T[]): T => xs[Math.floor(rand() * xs.length)];
  const nodes: PlanNode[] = [];
  for (let i = 0; i < n; i++) {
    const kind = i === 0 ? "scan" : pick(KINDS);
    const node: PlanNode = {
      id: i,
      kind,
      side: (rand() < 0.6 ? "Server" : "Client") as Side,
    };
    if (kind === "signal") node.name = `sig${i}`;
    else if (rand() < 0.8) node.dataset = rand() < 0.5 ? "main" : "other";
    if (rand() < 0.4) node.sql = `SELECT * FROM "t${i}" WHERE x < ${i} && y > 0 "quoted"`;
    nodes.push(node);
  }
  const edges: PlanEdge[] = [];
  const m = Math.floor(rand() * (n + 4));
  for (let i = 0; i < m; i++) {
    edges.push({
      from: Math.floor(rand() * (n + 2)), // may dangle past the node list
      to: Math.floor(rand() * (n + 2)),
      kind: pick(["data", "param", "publish"] as const),
    });
  }
  if (rand() < 0.3 && n >= 2) {
    edges.push({ from: 1, to: 0, kind: "data" });
    edges.push({ from: 0, to: 1, kind: "data" }); // a cycle, schema-legal
  }
  const cut_edges: CutEdge[] = [];
  for (const e of edges) {
    if (rand() < 0.25) cut_edges.push({ from: e.from, to: e.to });
  }
  if (rand() < 0.7) cut_edges.push({ from: nodes[n - 1].id, to: null });
  const est = () => rand() * 1000;
  const server_ms = est();
  const transfer_ms = est();
  const client_ms = est();
  const estimate: CostEstimate = {
    server_ms,
    transfer_ms,
    client_ms,
    total_ms: server_ms + transfer_ms + client_ms,
  };
  return { label: pick(LABELS), nodes, edges, cut_edges, estimate };
}
