/** Typed client for the consultation service. All numbers displayed by the
 * UI originate from these responses; nothing is computed client-side. */

import type {
  Beliefs,
  KbNetwork,
  KbSummary,
  Recommendation,
  SessionEvent,
  SessionView,
  WhatIfResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail?: string,
  ) {
    super(detail ? `${code}: ${detail}` : code);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(
        response.status,
        (payload as { error?: string }).error ?? `http_${response.status}`,
        (payload as { detail?: string }).detail,
      );
    }
    return payload as T;
  }

  listKbs(): Promise<KbSummary[]> {
    return this.request("GET", "/kbs");
  }

  getKb(name: string, tables = false): Promise<KbNetwork> {
    return this.request("GET", `/kbs/${encodeURIComponent(name)}${tables ? "?tables=true" : ""}`);
  }

  async createSession(kb: string): Promise<string> {
    const doc = await this.request<{ session_id: string }>("POST", "/sessions", { kb });
    return doc.session_id;
  }

  getSession(sid: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sid}`);
  }

  async putFinding(sid: string, node: string, state: string): Promise<Beliefs> {
    const doc = await this.request<{ beliefs: Beliefs }>(
      "PUT",
      `/sessions/${sid}/findings/${encodeURIComponent(node)}`,
      { state },
    );
    return doc.beliefs;
  }

  async deleteFinding(sid: string, node: string): Promise<Beliefs> {
    const doc = await this.request<{ beliefs: Beliefs }>(
      "DELETE",
      `/sessions/${sid}/findings/${encodeURIComponent(node)}`,
    );
    return doc.beliefs;
  }

  getBeliefs(sid: string): Promise<Beliefs> {
    return this.request("GET", `/sessions/${sid}/beliefs`);
  }

  getRecommendation(sid: string): Promise<Recommendation> {
    return this.request("GET", `/sessions/${sid}/recommendation`);
  }

  whatIf(sid: string, findings: Record<string, string>): Promise<WhatIfResult> {
    return this.request("POST", `/sessions/${sid}/whatif`, { findings });
  }

  getHistory(sid: string): Promise<SessionEvent[]> {
    return this.request("GET", `/sessions/${sid}/history`);
  }

  exportSession(sid: string): Promise<unknown> {
    return this.request("GET", `/sessions/${sid}/export`);
  }
}
