// Wire types mirroring the management server's REST contract.

export type Role = "viewer" | "analyst" | "admin";

export type AlertStatus = "open" | "acknowledged" | "resolved" | "false_positive";

export type Tier = "low" | "medium" | "high" | "critical";

export interface Detection {
  engine: "anomaly" | "signature" | "correlation" | "classifier";
  score: number;
  technique_ids: string[];
  evidence: string[];
  ts: string;
  severity: string;
}

export interface Alert {
  id: string;
  agent_id: string;
  created_ts: string;
  detections: Detection[];
  risk_score: number;
  tier: Tier;
  technique_ids: string[];
  status: AlertStatus;
  assignee: string | null;
  notes: string[];
  evidence_ids: string[];
  subject_user: string;
}

export interface AgentRecord {
  agent_id: string;
  hostname: string;
  last_heartbeat_ms: number | null;
  config_version: number;
  config: { heartbeat?: number; mode?: string };
  status: "online" | "offline";
}

export interface EventRecord {
  id: string;
  ts: string;
  agent_id: string;
  category: string;
  action: string;
  object: string;
  subject: { image: string; cmdline: string; user: string };
}

export interface PendingAction {
  id: string;
  kind: string;
  target: string;
  alert_id: string;
  requested_ts: string;
  status: string;
  mode: string;
}

export interface ActionResultDoc {
  action_id: string;
  kind: string;
  success: boolean;
  duration_ms: number;
  detail: string;
}

export interface ExecutedAction {
  action: PendingAction;
  result: ActionResultDoc;
}

export interface ResponsesView {
  executed: ExecutedAction[];
  pending: PendingAction[];
}

export interface Page<T> {
  items: T[];
  total: number;
  limit: number;
  offset: number;
}

export interface LoginResponse {
  token: string;
  role: Role;
  expires_in: number;
}

export interface ErrorBody {
  code: number;
  message: string;
  detail: string;
}
