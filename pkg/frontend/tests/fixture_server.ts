// In-memory fixture implementing the management server's REST contract:
// token auth with roles, the alert lifecycle DAG (409 on illegal moves),
// role enforcement (401/403), heartbeat-derived agent status, and the
// pending/approve response flow with idempotent ledger effects.

import type {
  Alert, AlertStatus, AgentRecord, EventRecord, PendingAction, Role,
} from "../src/types.js";
import type { FetchLike } from "../src/api.js";

const LEGAL: Record<AlertStatus, AlertStatus[]> = {
  open: ["acknowledged", "resolved", "false_positive"],
  acknowledged: ["resolved", "false_positive"],
  resolved: [],
  false_positive: [],
};

const ROLE_RANK: Record<Role, number> = { viewer: 0, analyst: 1, admin: 2 };

interface User { password: string; role: Role; }

export class FixtureServer {
  users = new Map<string, User>([
    ["root", { password: "rootpw", role: "admin" }],
    ["ana", { password: "anapw", role: "analyst" }],
    ["vee", { password: "veepw", role: "viewer" }],
  ]);
  tokens = new Map<string, Role>();
  expiredTokens = new Set<string>();
  alerts = new Map<string, Alert>();
  agents = new Map<string, AgentRecord>();
  events: EventRecord[] = [];
  pending = new Map<string, PendingAction>();
  executed: { action: PendingAction; result: {
    action_id: string; kind: string; success: boolean;
    duration_ms: number; detail: string; } }[] = [];
  appliedEffects = new Set<string>();
  requestLog: { method: string; path: string }[] = [];
  failNextRequests = 0;
  private tokenCounter = 0;

  seedAlert(partial: Partial<Alert> & { id: string }): Alert {
    const alert: Alert = {
      agent_id: "agent-01", created_ts: "2025-03-17T09:00:00.000Z",
      detections: [], risk_score: 0.5, tier: "medium", technique_ids: [],
      status: "open", assignee: null, notes: [], evidence_ids: [],
      subject_user: "alice", ...partial,
    };
    this.alerts.set(alert.id, alert);
    return alert;
  }

  seedAgent(partial: Partial<AgentRecord> & { agent_id: string }): AgentRecord {
    const agent: AgentRecord = {
      hostname: "host", last_heartbeat_ms: null, config_version: 1,
      config: { heartbeat: 30 }, status: "offline", ...partial,
    };
    this.agents.set(agent.agent_id, agent);
    return agent;
  }

  seedPending(action: Partial<PendingAction> & { id: string; alert_id: string }): PendingAction {
    const full: PendingAction = {
      kind: "firewall_rule_update", target: "deny 203.0.113.9",
      requested_ts: "2025-03-17T09:01:00.000Z", status: "pending",
      mode: "approval_required", ...action,
    };
    this.pending.set(full.id, full);
    return full;
  }

  /** FetchLike for the ApiClient under test. */
  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const parsed = new URL(url, "http://fixture");
    const path = parsed.pathname;
    this.requestLog.push({ method, path });

    if (this.failNextRequests > 0) {
      this.failNextRequests -= 1;
      throw new TypeError("network down");
    }

    const body = init?.body ? JSON.parse(String(init.body)) : {};
    const authHeader = (init?.headers as Record<string, string>)?.["Authorization"];

    if (method === "POST" && path === "/api/v1/auth/login") {
      const user = this.users.get(body.user);
      if (!user || user.password !== body.password) {
        return reply(401, { code: 401, message: "authentication required",
                            detail: "invalid credentials" });
      }
      const token = `tok-${++this.tokenCounter}-${body.user}`;
      this.tokens.set(token, user.role);
      return reply(200, { token, role: user.role, expires_in: 28800 });
    }

    const token = authHeader?.startsWith("Bearer ") ? authHeader.slice(7) : null;
    if (!token || this.expiredTokens.has(token) || !this.tokens.has(token)) {
      return reply(401, { code: 401, message: "authentication required",
                          detail: token ? "token expired" : "missing bearer token" });
    }
    const role = this.tokens.get(token)!;
    const atLeast = (minimum: Role) => ROLE_RANK[role] >= ROLE_RANK[minimum];

    if (method === "GET" && path === "/api/v1/alerts") {
      const items = [...this.alerts.values()];
      return reply(200, { items, total: items.length, limit: 100, offset: 0 });
    }

    const patchMatch = path.match(/^\/api\/v1\/alerts\/(.+)$/);
    if (method === "PATCH" && patchMatch) {
      if (!atLeast("analyst")) {
        return reply(403, { code: 403, message: "forbidden",
                            detail: "requires analyst role" });
      }
      const alert = this.alerts.get(patchMatch[1]);
      if (!alert) {
        return reply(404, { code: 404, message: "not found",
                            detail: `unknown alert ${patchMatch[1]}` });
      }
      if (body.status) {
        if (!LEGAL[alert.status].includes(body.status as AlertStatus)) {
          return reply(409, { code: 409, message: "conflict",
                              detail: `${alert.status} -> ${body.status} is not allowed` });
        }
        alert.status = body.status;
      }
      if (body.assignee !== undefined) alert.assignee = body.assignee;
      if (body.note) alert.notes.push(body.note);
      return reply(200, alert);
    }

    if (method === "GET" && path === "/api/v1/agents") {
      const now = Date.now();
      const items = [...this.agents.values()].map((a) => ({
        ...a,
        status: (a.last_heartbeat_ms !== null
          && now - a.last_heartbeat_ms <= 3 * (a.config.heartbeat ?? 30) * 1000
          ? "online" : "offline") as "online" | "offline",
      }));
      return reply(200, { items, total: items.length, limit: 100, offset: 0 });
    }

    if (method === "GET" && path === "/api/v1/events") {
      const agent = parsed.searchParams.get("agent");
      const items = this.events.filter((e) => !agent || e.agent_id === agent);
      return reply(200, { items, total: items.length, limit: 200, offset: 0 });
    }

    if (method === "GET" && path === "/api/v1/responses") {
      const alertId = parsed.searchParams.get("alert_id");
      const executed = this.executed.filter(
        (e) => !alertId || e.action.alert_id === alertId);
      const pending = [...this.pending.values()].filter(
        (p) => !alertId || p.alert_id === alertId);
      return reply(200, { executed, pending });
    }

    if (method === "POST" && path === "/api/v1/responses") {
      if (!atLeast("analyst")) {
        return reply(403, { code: 403, message: "forbidden",
                            detail: "requires analyst role" });
      }
      if (!this.alerts.has(body.alert_id)) {
        return reply(404, { code: 404, message: "not found",
                            detail: `unknown alert ${body.alert_id}` });
      }
      if (body.approve) {
        const executed = [];
        for (const actionId of body.approve as string[]) {
          const pending = this.pending.get(actionId);
          if (!pending) {
            return reply(404, { code: 404, message: "not found",
                                detail: `no pending action ${actionId}` });
          }
          this.pending.delete(actionId);
          const effectKey = `${pending.kind}|${pending.target}`;
          const fresh = !this.appliedEffects.has(effectKey);
          this.appliedEffects.add(effectKey);
          const record = {
            action: { ...pending, status: "succeeded" },
            result: { action_id: pending.id, kind: pending.kind, success: true,
                      duration_ms: 1.25,
                      detail: fresh ? "applied" : "already in effect (no-op)" },
          };
          this.executed.push(record);
          executed.push(record);
        }
        return reply(200, { executed, pending: [] });
      }
      return reply(200, { executed: [], pending: [...this.pending.values()] });
    }

    return reply(404, { code: 404, message: "not found", detail: path });
  };
}

function reply(status: number, doc: unknown): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
