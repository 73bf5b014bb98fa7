/** Payload shapes, mirroring the service's published JSON schemas. */

export type Side = "Server" | "Client";
export type PlanLabel = "baseline" | "recommended" | "custom";

export interface PlanNode {
  id: number;
  kind: string;
  side: Side;
  dataset?: string;
  name?: string;
  sql?: string;
}

export interface PlanEdge {
  from: number;
  to: number;
  kind: "data" | "param" | "publish";
}

export interface CutEdge {
  from: number;
  to: number | null;
}

export interface CostEstimate {
  server_ms: number;
  transfer_ms: number;
  client_ms: number;
  total_ms: number;
}

export interface Plan {
  label: PlanLabel;
  nodes: PlanNode[];
  edges: PlanEdge[];
  cut_edges: CutEdge[];
  estimate: CostEstimate;
}

export interface Timing {
  seq: number;
  label: PlanLabel;
  server_ms: number;
  network_ms: number;
  client_ms: number;
  total_ms: number;
}

export type Row = Record<string, number | string | boolean | null>;

export interface SessionCreated {
  session_id: string;
  plan: Plan;
  candidates: Record<string, Plan>;
  sinks: Record<string, Row[]>;
  timings: Timing[];
}

export interface SignalResponse {
  changed: string[];
  sinks: Record<string, Row[]>;
  timing: Timing;
  plan_label: PlanLabel;
}

export interface PartitionResponse {
  plan: Plan;
  timing: Timing;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
  path?: string;
  node_id?: number;
}

export interface NetworkSettings {
  latency_ms: number;
  bandwidth_mbps: number;
}

export interface SpecDocument {
  vegaplus_version: number;
  data: unknown[];
  signals?: SignalSpec[];
  marks?: MarkSpec[];
  [key: string]: unknown;
}

export interface SignalSpec {
  name: string;
  value: number | string | boolean;
  bind?: {
    input: "range" | "select" | "radio" | "text";
    min?: number;
    max?: number;
    step?: number;
    options?: (number | string)[];
  };
}

export interface MarkSpec {
  type: string;
  from: { data: string };
  encoding: Record<string, string>;
}
