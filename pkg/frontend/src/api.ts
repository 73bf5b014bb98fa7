/** Typed client for the middleware API. Injectable fetch so component tests
 * can mock the server. Every displayed number originates here. */

import type {
  ApiErrorBody,
  NetworkSettings,
  PartitionResponse,
  Plan,
  Row,
  SessionCreated,
  SignalResponse,
  Side,
  SpecDocument,
  Timing,
} from "./types.js";

export class ApiError extends Error {
  constructor(public body: ApiErrorBody) {
    super(body.message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private base = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      let body: ApiErrorBody;
      try {
        body = (await res.json()) as ApiErrorBody;
      } catch {
        body = { status: res.status, code: "http_error", message: res.statusText };
      }
      throw new ApiError(body);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(spec: SpecDocument, network?: NetworkSettings, compareBaseline = true): Promise<SessionCreated> {
    const query = compareBaseline ? "?compare=baseline" : "";
    return this.post<SessionCreated>(`/api/specs${query}`, { spec, network });
  }

  postSignal(sessionId: string, name: string, value: number | string | boolean): Promise<SignalResponse> {
    return this.post<SignalResponse>(`/api/sessions/${sessionId}/signals`, { name, value });
  }

  togglePartition(sessionId: string, nodeId: number, side: Side): Promise<PartitionResponse> {
    return this.post<PartitionResponse>(`/api/sessions/${sessionId}/partition`, { node_id: nodeId, side });
  }

  getPlan(sessionId: string): Promise<{ plan: Plan; baseline: Plan; candidates: Record<string, Plan> }> {
    return this.request(`/api/sessions/${sessionId}/plan`);
  }

  getTimings(sessionId: string): Promise<{ timings: Timing[] }> {
    return this.request(`/api/sessions/${sessionId}/timings`);
  }

  async getDatasetRows(sessionId: string, name: string, limit?: number): Promise<Row[]> {
    const query = limit ? `?limit=${limit}` : "";
    const res = await this.fetchFn(`${this.base}/api/sessions/${sessionId}/datasets/${name}${query}`);
    if (!res.ok) {
      throw new ApiError((await res.json()) as ApiErrorBody);
    }
    const text = await res.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as Row);
  }

  getMetrics(): Promise<Record<string, number>> {
    return this.request("/api/metrics");
  }
}
