/** Performance view controller: holds the active session's plan and timing
 * history, applies toggles through the API (reverting on rejection), and
 * recreates the session when the simulated latency changes. Pure state +
 * injected API, so component tests run without a DOM. */

import { ApiClient, ApiError } from "./api.js";
import type { NetworkSettings, Plan, SessionCreated, SpecDocument, Timing, Side } from "./types.js";
import { planViewModel, type PlanViewModel } from "./planview.js";
import { timingBars, type TimingBarModel } from "./bars.js";

export interface PerfState {
  sessionId: string;
  plan: Plan;
  timings: Timing[];
  toast: string | null;
}

export class PerfController {
  state: PerfState | null = null;
  private spec: SpecDocument | null = null;
  network: NetworkSettings = { latency_ms: 0, bandwidth_mbps: 0 };

  constructor(private api: ApiClient) {}

  adopt(spec: SpecDocument, created: SessionCreated): PerfState {
    this.spec = spec;
    this.state = {
      sessionId: created.session_id,
      plan: created.plan,
      timings: [...created.timings],
      toast: null,
    };
    return this.state;
  }

  planView(): PlanViewModel {
    if (!this.state) throw new Error("no active session");
    return planViewModel(this.state.plan);
  }

  barsView(): TimingBarModel {
    if (!this.state) throw new Error("no active session");
    return timingBars(this.state.timings);
  }

  nodeSide(nodeId: number): Side | undefined {
    return this.state?.plan.nodes.find((n) => n.id === nodeId)?.side;
  }

  /** Click handler: flip the node's side. On OverrideRejected the plan is
   * left untouched and the rejection becomes a toast. */
  async toggle(nodeId: number): Promise<PerfState> {
    if (!this.state) throw new Error("no active session");
    const current = this.nodeSide(nodeId);
    if (current === undefined) return this.state;
    const flipped: Side = current === "Server" ? "Client" : "Server";
    try {
      const res = await this.api.togglePartition(this.state.sessionId, nodeId, flipped);
      this.state = {
        ...this.state,
        plan: res.plan,
        timings: [...this.state.timings, res.timing],
        toast: null,
      };
    } catch (err) {
      if (err instanceof ApiError && err.body.code === "override_rejected") {
        this.state = { ...this.state, toast: err.body.message };
      } else {
        throw err;
      }
    }
    return this.state;
  }

  /** The latency slider recreates the session under a new simulated
   * network profile (plans and timings come back fresh). */
  async setNetwork(network: NetworkSettings): Promise<PerfState> {
    if (!this.spec) throw new Error("no active spec");
    this.network = network;
    const created = await this.api.createSession(this.spec, network);
    return this.adopt(this.spec, created);
  }

  async refreshTimings(): Promise<Timing[]> {
    if (!this.state) throw new Error("no active session");
    const res = await this.api.getTimings(this.state.sessionId);
    this.state = { ...this.state, timings: res.timings };
    return res.timings;
  }
}

/** Sides by node id: the toggle round-trip test compares these. */
export function sidesOf(plan: Plan): Record<number, Side> {
  const out: Record<number, Side> = {};
  for (const n of plan.nodes) out[n.id] = n.side;
  return out;
}
