// Pure alert-queue logic: ordering, the triage lifecycle, and role gating.
// Action availability must stay a pure function of (role, alert status),
// mirroring the server's authorization table.

import type { Alert, AlertStatus, Role, Tier } from "../types.js";

export const TIER_RANK: Record<Tier, number> = {
  low: 0, medium: 1, high: 2, critical: 3,
};

// Legal triage transitions; resolved/false_positive are terminal.
const TRANSITIONS: Record<AlertStatus, AlertStatus[]> = {
  open: ["acknowledged", "resolved", "false_positive"],
  acknowledged: ["resolved", "false_positive"],
  resolved: [],
  false_positive: [],
};

export function sortAlerts(alerts: Alert[]): Alert[] {
  return [...alerts].sort((a, b) => {
    const byTier = TIER_RANK[b.tier] - TIER_RANK[a.tier];
    if (byTier !== 0) return byTier;
    return Date.parse(b.created_ts) - Date.parse(a.created_ts);
  });
}

export function legalTransitions(status: AlertStatus): AlertStatus[] {
  return TRANSITIONS[status] ?? [];
}

export function canTriage(role: Role | null): boolean {
  return role === "analyst" || role === "admin";
}

/** Transitions the console may offer: empty for viewers, the lifecycle
 * successors otherwise. */
export function availableTransitions(role: Role | null,
                                     status: AlertStatus): AlertStatus[] {
  if (!canTriage(role)) return [];
  return legalTransitions(status);
}

export function canTriggerResponse(role: Role | null): boolean {
  return role === "analyst" || role === "admin";
}

export function statusChip(status: AlertStatus): string {
  return { open: "OPEN", acknowledged: "ACK", resolved: "RESOLVED",
           false_positive: "FALSE+" }[status];
}

export function tierCounts(alerts: Alert[]): Record<Tier, number> {
  const counts: Record<Tier, number> = { low: 0, medium: 0, high: 0, critical: 0 };
  for (const alert of alerts) counts[alert.tier] += 1;
  return counts;
}
