import type {
  AlertEntry,
  ConditionResponse,
  MachineSummary,
  PolicyEcho,
  StopAccepted,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`api ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type StopResult =
  | { ok: true; accepted: StopAccepted }
  | { ok: false; status: number; detail: string };

/**
 * Thin fetch client for the maintenance service. Paths and payloads mirror
 * the server contract one to one; nothing is cached or post-processed here.
 */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private token?: string,
  ) {}

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["content-type"] = "application/json";
    if (this.token) h["authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path, { headers: this.headers() });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as T;
  }

  machines(): Promise<MachineSummary[]> {
    return this.getJson("/machines");
  }

  condition(machineId: string, window?: number): Promise<ConditionResponse> {
    const qs = window === undefined ? "" : `?window=${window}`;
    return this.getJson(`/machines/${encodeURIComponent(machineId)}/condition${qs}`);
  }

  alerts(sinceSeq = 0): Promise<AlertEntry[]> {
    return this.getJson(`/alerts?since_seq=${sinceSeq}`);
  }

  async setPolicy(style: string, threshold?: number | null, machineId?: string): Promise<PolicyEcho> {
    const body: Record<string, unknown> = { style };
    if (threshold !== undefined && threshold !== null) body.threshold = threshold;
    if (machineId) body.machine_id = machineId;
    const res = await fetch(this.baseUrl + "/policy", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as PolicyEcho;
  }

  /** 409 (stop already pending) and 404 come back as values, not throws. */
  async stopMachine(machineId: string, reason = "operator_request"): Promise<StopResult> {
    const res = await fetch(`${this.baseUrl}/machines/${encodeURIComponent(machineId)}/stop`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ reason }),
    });
    if (res.status === 202) {
      return { ok: true, accepted: (await res.json()) as StopAccepted };
    }
    return { ok: false, status: res.status, detail: await res.text() };
  }
}
