/** Plan JSON -> view model -> SVG. Pure functions; the mapping is total, so
 * any schema-valid plan renders without throwing. Layout is layered left to
 * right by topological depth (pipelines are linear, so this is stable). */

import type { CutEdge, Plan, PlanEdge, PlanNode, Side } from "./types.js";

export const SIDE_COLORS: Record<Side, string> = {
  Server: "#4c78a8",
  Client: "#f58518",
};

export const NODE_W = 112;
export const NODE_H = 34;
export const GAP_X = 56;
export const GAP_Y = 26;
const PAD = 16;

export interface LaidOutNode extends PlanNode {
  depth: number;
  row: number;
  x: number;
  y: number;
}

export interface LaidOutEdge extends PlanEdge {
  cut: boolean;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface PlanViewModel {
  label: Plan["label"];
  nodes: LaidOutNode[];
  edges: LaidOutEdge[];
  deliveries: number[]; // node ids whose output ships to the mark renderer
  width: number;
  height: number;
}

/** Longest-path depth over all edge kinds, bounded so malformed (cyclic)
 * input still terminates. */
function depths(nodes: PlanNode[], edges: PlanEdge[]): Map<number, number> {
  const depth = new Map<number, number>();
  for (const n of nodes) depth.set(n.id, 0);
  const known = edges.filter((e) => depth.has(e.from) && depth.has(e.to));
  for (let pass = 0; pass < nodes.length + 1; pass++) {
    let changed = false;
    for (const e of known) {
      const want = (depth.get(e.from) ?? 0) + 1;
      if (want > (depth.get(e.to) ?? 0) && want <= nodes.length) {
        depth.set(e.to, want);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return depth;
}

export function planViewModel(plan: Plan): PlanViewModel {
  const depth = depths(plan.nodes, plan.edges);

  // one row per dataset in first-seen order; signals above the pipelines
  const rows = new Map<string, number>();
  let signalRow = 0;
  const rowOf = (n: PlanNode): number => {
    if (n.kind === "signal") return signalRow;
    const key = n.dataset ?? "(dataset)";
    if (!rows.has(key)) rows.set(key, rows.size);
    return rows.get(key)!;
  };
  const nodeRows = new Map<number, number>();
  for (const n of plan.nodes) {
    if (n.kind !== "signal") nodeRows.set(n.id, rowOf(n));
  }
  signalRow = rows.size;
  let nextSignalRow = rows.size;
  for (const n of plan.nodes) {
    if (n.kind === "signal") nodeRows.set(n.id, nextSignalRow++);
  }

  const nodes: LaidOutNode[] = plan.nodes.map((n) => {
    const d = depth.get(n.id) ?? 0;
    const r = nodeRows.get(n.id) ?? 0;
    return {
      ...n,
      depth: d,
      row: r,
      x: PAD + d * (NODE_W + GAP_X),
      y: PAD + r * (NODE_H + GAP_Y),
    };
  });
  const byId = new Map(nodes.map((n) => [n.id, n]));

  const cutKeys = new Set(plan.cut_edges.filter((c) => c.to !== null).map((c) => `${c.from}->${c.to}`));
  const deliveries = plan.cut_edges.filter((c) => c.to === null).map((c) => c.from);

  const edges: LaidOutEdge[] = [];
  for (const e of plan.edges) {
    const a = byId.get(e.from);
    const b = byId.get(e.to);
    if (!a || !b) continue; // dangling reference: skip rather than fail
    edges.push({
      ...e,
      cut: cutKeys.has(`${e.from}->${e.to}`),
      x1: a.x + NODE_W,
      y1: a.y + NODE_H / 2,
      x2: b.x,
      y2: b.y + NODE_H / 2,
    });
  }

  const width = Math.max(...nodes.map((n) => n.x + NODE_W), 0) + PAD;
  const height = Math.max(...nodes.map((n) => n.y + NODE_H), 0) + PAD;
  return { label: plan.label, nodes, edges, deliveries, width, height };
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function nodeTitle(n: PlanNode): string {
  const lines = [`${n.kind}${n.dataset ? ` (${n.dataset})` : ""}${n.name ? ` ${n.name}` : ""} - ${n.side}`];
  if (n.sql) lines.push(n.sql);
  return lines.join("\n");
}

/** SVG text for the dataflow overview. Nodes carry data-node-id so the
 * performance view can attach toggle handlers. */
export function renderPlanSvg(vm: PlanViewModel): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${vm.width} ${vm.height}" width="${vm.width}" height="${vm.height}">`,
  );
  for (const e of vm.edges) {
    const dash = e.kind === "data" ? "" : ' stroke-dasharray="4 3"';
    const stroke = e.cut ? "#e45756" : "#9aa0a6";
    const width = e.cut ? 2.4 : 1.4;
    parts.push(
      `<line x1="${e.x1}" y1="${e.y1}" x2="${e.x2}" y2="${e.y2}" stroke="${stroke}" stroke-width="${width}"${dash}/>`,
    );
    if (e.cut) {
      const mx = (e.x1 + e.x2) / 2;
      const my = (e.y1 + e.y2) / 2;
      parts.push(`<text x="${mx}" y="${my - 4}" font-size="9" fill="#e45756" text-anchor="middle">cut</text>`);
    }
  }
  for (const n of vm.nodes) {
    const fill = n.kind === "signal" ? "#ffffff" : SIDE_COLORS[n.side] ?? SIDE_COLORS.Client;
    const textFill = n.kind === "signal" ? "#333" : "#fff";
    const shipped = vm.deliveries.includes(n.id) ? ' stroke="#e45756" stroke-width="2.4"' : ' stroke="#555"';
    parts.push(`<g class="plan-node" data-node-id="${n.id}" data-kind="${esc(n.kind)}">`);
    parts.push(`<title>${esc(nodeTitle(n))}</title>`);
    parts.push(`<rect x="${n.x}" y="${n.y}" width="${NODE_W}" height="${NODE_H}" rx="6" fill="${fill}"${shipped}/>`);
    const label = n.kind === "signal" ? `⚙ ${n.name ?? "signal"}` : n.kind;
    parts.push(
      `<text x="${n.x + NODE_W / 2}" y="${n.y + NODE_H / 2 + 4}" font-size="12" text-anchor="middle" fill="${textFill}">${esc(label)}</text>`,
    );
    parts.push("</g>");
  }
  parts.push("</svg>");
  return parts.join("");
}
