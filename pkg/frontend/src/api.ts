// Typed client for the management API. Every console mutation flows through
// a documented server route; nothing is persisted client-side beyond the
// session token held in memory.

import type {
  Alert, AgentRecord, EventRecord, LoginResponse, Page, ResponsesView, Role,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`api error ${status}: ${detail}`);
  }
}

export class ApiClient {
  private token: string | null = null;
  public role: Role | null = null;
  public onAuthExpired: (() => void) | null = null;

  constructor(
    public readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  get authenticated(): boolean {
    return this.token !== null;
  }

  async login(user: string, password: string): Promise<LoginResponse> {
    const doc = await this.request<LoginResponse>("POST", "/api/v1/auth/login",
      { user, password }, false);
    this.token = doc.token;
    this.role = doc.role;
    return doc;
  }

  logout(): void {
    this.token = null;
    this.role = null;
  }

  listAlerts(params: { status?: string; tier?: string } = {}): Promise<Page<Alert>> {
    return this.request("GET", "/api/v1/alerts" + query(params));
  }

  patchAlert(id: string, body: { status?: string; assignee?: string; note?: string }):
      Promise<Alert> {
    return this.request("PATCH", `/api/v1/alerts/${id}`, body);
  }

  listAgents(): Promise<Page<AgentRecord>> {
    return this.request("GET", "/api/v1/agents");
  }

  listEvents(params: { agent?: string; category?: string; limit?: number;
                       offset?: number } = {}): Promise<Page<EventRecord>> {
    return this.request("GET", "/api/v1/events" + query(params));
  }

  listResponses(alertId?: string): Promise<ResponsesView> {
    return this.request("GET", "/api/v1/responses"
      + (alertId ? query({ alert_id: alertId }) : ""));
  }

  triggerPolicy(alertId: string): Promise<{ executed: unknown[]; pending: unknown[] }> {
    return this.request("POST", "/api/v1/responses", { alert_id: alertId });
  }

  approveActions(alertId: string, actionIds: string[]):
      Promise<{ executed: { action: unknown; result: unknown }[] }> {
    return this.request("POST", "/api/v1/responses",
      { alert_id: alertId, approve: actionIds });
  }

  private async request<T>(method: string, path: string, body?: unknown,
                           auth = true): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (auth && this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 401 && auth) {
      this.logout();
      this.onAuthExpired?.();
      throw new ApiError(401, "session expired");
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const err = await resp.json();
        detail = err.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
  }
}

function query(params: Record<string, string | number | undefined>): string {
  const parts = Object.entries(params)
    .filter(([, v]) => v !== undefined && v !== "")
    .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`);
  return parts.length ? "?" + parts.join("&") : "";
}
