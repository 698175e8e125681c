// Fleet board logic: the online/offline rule is derived, never stored.
// An agent is online iff its last heartbeat is within three heartbeat
// intervals (the server applies the same rule; the client re-derives so a
// stalled poll cannot freeze every agent as "online").

import type { AgentRecord } from "../types.js";

export const DEFAULT_HEARTBEAT_SECONDS = 30;

export function deriveStatus(lastHeartbeatMs: number | null,
                             heartbeatSeconds: number,
                             nowMs: number): "online" | "offline" {
  if (lastHeartbeatMs === null) return "offline";
  return nowMs - lastHeartbeatMs <= 3 * heartbeatSeconds * 1000
    ? "online" : "offline";
}

export interface FleetRow {
  agent_id: string;
  hostname: string;
  status: "online" | "offline";
  config_version: number;
}

export function fleetRows(agents: AgentRecord[], nowMs: number): FleetRow[] {
  return agents
    .map((a) => ({
      agent_id: a.agent_id,
      hostname: a.hostname,
      status: deriveStatus(a.last_heartbeat_ms,
                           a.config.heartbeat ?? DEFAULT_HEARTBEAT_SECONDS, nowMs),
      config_version: a.config_version,
    }))
    .sort((x, y) => x.agent_id.localeCompare(y.agent_id));
}
