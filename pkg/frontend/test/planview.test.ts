import { describe, expect, it } from "vitest";

import { NODE_W, planViewModel, renderPlanSvg, SIDE_COLORS } from "../src/planview.js";
import type { Plan } from "../src/types.js";
import { genPlan, mulberry32 } from "./genplans.js";

const FLIGHTS_PLAN: Plan = {
  label: "recommended",
  nodes: [
    { id: 0, kind: "signal", side: "Client", name: "maxbins" },
    { id: 1, kind: "scan", side: "Server", dataset: "flights" },
    { id: 2, kind: "extent", side: "Server", dataset: "binned", sql: 'SELECT MIN("delay") AS "min" ...' },
    { id: 3, kind: "signal", side: "Client", name: "delay_extent" },
    { id: 4, kind: "bin", side: "Server", dataset: "binned", sql: "SELECT ..." },
    { id: 5, kind: "aggregate", side: "Server", dataset: "binned", sql: "SELECT ..." },
  ],
  edges: [
    { from: 1, to: 2, kind: "data" },
    { from: 1, to: 4, kind: "data" },
    { from: 4, to: 5, kind: "data" },
    { from: 2, to: 3, kind: "publish" },
    { from: 3, to: 4, kind: "param" },
    { from: 0, to: 4, kind: "param" },
  ],
  cut_edges: [{ from: 5, to: null }],
  estimate: { server_ms: 10, transfer_ms: 50, client_ms: 0, total_ms: 60 },
};

describe("planViewModel", () => {
  it("mirrors the plan JSON exactly (same ids, kinds, sides, sql)", () => {
    const vm = planViewModel(FLIGHTS_PLAN);
    expect(vm.nodes.map((n) => n.id)).toEqual([0, 1, 2, 3, 4, 5]);
    expect(vm.nodes.map((n) => n.side)).toEqual(FLIGHTS_PLAN.nodes.map((n) => n.side));
    expect(vm.nodes[2].sql).toContain("MIN");
    expect(vm.edges).toHaveLength(FLIGHTS_PLAN.edges.length);
  });

  it("lays out left to right by topological depth", () => {
    const vm = planViewModel(FLIGHTS_PLAN);
    const byId = new Map(vm.nodes.map((n) => [n.id, n]));
    // scan(1) -> extent(2) -> signal(3) -> bin(4) -> aggregate(5)
    expect(byId.get(1)!.depth).toBe(0);
    expect(byId.get(2)!.depth).toBe(1);
    expect(byId.get(3)!.depth).toBe(2);
    expect(byId.get(4)!.depth).toBe(3);
    expect(byId.get(5)!.depth).toBe(4);
    for (const e of FLIGHTS_PLAN.edges) {
      expect(byId.get(e.to)!.x).toBeGreaterThan(byId.get(e.from)!.x);
    }
  });

  it("marks the mark-delivery producer", () => {
    const vm = planViewModel(FLIGHTS_PLAN);
    expect(vm.deliveries).toEqual([5]);
  });
});

describe("renderPlanSvg", () => {
  it("renders the two sides in the two documented colors", () => {
    const svg = renderPlanSvg(planViewModel(FLIGHTS_PLAN));
    expect(svg).toContain(SIDE_COLORS.Server);
    expect(SIDE_COLORS.Server).not.toBe(SIDE_COLORS.Client);
    expect(svg).toContain('data-node-id="4"');
  });

  it("exposes params and SQL as hover titles", () => {
    const svg = renderPlanSvg(planViewModel(FLIGHTS_PLAN));
    expect(svg).toContain("<title>");
    expect(svg).toContain("MIN(&quot;delay&quot;)");
  });

  it("escapes hostile text in sql tooltips", () => {
    const plan: Plan = {
      ...FLIGHTS_PLAN,
      nodes: [{ id: 0, kind: "scan", side: "Server", sql: '<script>alert(1)</script> && "x"' }],
      edges: [],
      cut_edges: [],
    };
    const svg = renderPlanSvg(planViewModel(plan));
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
  });

  it("fuzz: 200 generated schema-valid plans render with zero errors", () => {
    const rand = mulberry32(20240801);
    for (let i = 0; i < 200; i++) {
      const plan = genPlan(rand);
      const vm = planViewModel(plan);
      const svg = renderPlanSvg(vm);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.endsWith("</svg>")).toBe(true);
      expect(vm.nodes).toHaveLength(plan.nodes.length);
      for (const n of vm.nodes) {
        expect(Number.isFinite(n.x)).toBe(true);
        expect(Number.isFinite(n.y)).toBe(true);
      }
      expect(vm.width).toBeGreaterThanOrEqual(NODE_W);
    }
  });
});
