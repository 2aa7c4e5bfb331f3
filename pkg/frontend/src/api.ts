/** Typed client for the decision-service endpoints. */

import type { DecideAck, SessionState, SessionSummary } from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string
  ) {
    super(`service ${status}: ${detail}`);
  }
}

export class SessionApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = await resp.json();
    if (!resp.ok) {
      throw new ServiceError(resp.status, String(body.detail ?? resp.statusText));
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("/sessions");
  }

  createSession(body: Record<string, unknown>): Promise<{ session_id: string }> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  resumeSession(id: string): Promise<{ session_id: string }> {
    return this.request(`/sessions/${id}/resume`, { method: "POST" });
  }

  getState(id: string): Promise<SessionState> {
    return this.request(`/sessions/${id}`);
  }

  decide(id: string, index: number): Promise<DecideAck> {
    return this.request(`/sessions/${id}/decision`, {
      method: "POST",
      body: JSON.stringify({ index }),
    });
  }

  abort(id: string): Promise<{ status: string }> {
    return this.request(`/sessions/${id}/abort`, { method: "POST" });
  }
}
