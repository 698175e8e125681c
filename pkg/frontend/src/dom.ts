// Thin DOM rendering over the view-model. Everything interesting happens in
// viewmodel.ts / model/*; this file only projects state into elements.

import { statusChip } from "./model/alerts.js";
import { buildTimeline } from "./model/timeline.js";
import type { DashboardViewModel } from "./viewmodel.js";
import type { Alert, AlertStatus } from "./types.js";

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function renderBanner(vm: DashboardViewModel, root: HTMLElement): void {
  root.textContent = "";
  if (vm.staleData) {
    root.appendChild(el("div", "banner stale",
      "connection lost - showing last known data"));
  }
  if (vm.inlineError) {
    root.appendChild(el("div", "banner error", vm.inlineError));
  }
}

export function renderAlerts(vm: DashboardViewModel, root: HTMLElement): void {
  root.textContent = "";
  if (vm.alerts.length === 0) {
    root.appendChild(el("p", "empty", "no alerts"));
    return;
  }
  for (const alert of vm.alerts) {
    const row = el("div", `alert tier-${alert.tier}`);
    row.appendChild(el("span", "chip", statusChip(alert.status)));
    row.appendChild(el("span", "tier", alert.tier.toUpperCase()));
    row.appendChild(el("span", "risk", alert.risk_score.toFixed(2)));
    row.appendChild(el("span", "techniques", alert.technique_ids.join(", ")));
    row.appendChild(el("span", "agent", alert.agent_id));

    for (const next of vm.transitionsFor(alert)) {
      const button = el("button", "transition", next) as HTMLButtonElement;
      button.addEventListener("click", () => void vm.triageAlert(alert.id, next));
      row.appendChild(button);
    }

    if (vm.responseControlsVisible) {
      const pending = vm.pendingFor(alert.id);
      if (pending.length) {
        const approve = el("button", "approve",
          `approve ${pending.length} action(s)`) as HTMLButtonElement;
        approve.addEventListener("click", () =>
          void vm.approveResponse(alert.id, pending.map((p) => p.id)));
        row.appendChild(approve);
      }
    }
    root.appendChild(row);
  }
}

export function renderFleet(vm: DashboardViewModel, root: HTMLElement,
                            onSelect: (agentId: string) => void): void {
  root.textContent = "";
  if (vm.fleet.length === 0) {
    root.appendChild(el("p", "empty", "no agents enrolled"));
    return;
  }
  for (const agent of vm.fleet) {
    const row = el("div", `agent ${agent.status}`);
    row.appendChild(el("span", "dot", agent.status === "online" ? "●" : "○"));
    row.appendChild(el("span", "id", agent.agent_id));
    row.appendChild(el("span", "host", agent.hostname));
    row.addEventListener("click", () => onSelect(agent.agent_id));
    root.appendChild(row);
  }
}

export function renderTimeline(vm: DashboardViewModel, root: HTMLElement): void {
  root.textContent = "";
  const entries = buildTimeline(vm.timelineEvents, vm.alerts);
  if (entries.length === 0) {
    root.appendChild(el("p", "empty", "no events for this asset"));
    return;
  }
  for (const entry of entries) {
    const row = el("div", entry.highlighted ? "event highlighted" : "event");
    row.appendChild(el("span", "ts", entry.event.ts));
    row.appendChild(el("span", "cat",
      `${entry.event.category}/${entry.event.action}`));
    row.appendChild(el("span", "obj", entry.event.object));
    if (entry.highlighted) {
      row.appendChild(el("span", "flag", `detected (${entry.alertIds.length})`));
    }
    root.appendChild(row);
  }
}

export function renderActionResults(vm: DashboardViewModel, root: HTMLElement): void {
  root.textContent = "";
  for (const row of vm.lastActionResults) {
    const badge = row.success ? "ok" : "failed";
    root.appendChild(el("div", `result ${badge}`,
      `${row.kind} ${row.target}: ${badge} (${row.durationMs.toFixed(1)} ms)`));
  }
}

export function transitionLabel(status: AlertStatus): string {
  return statusChip(status);
}

export function alertSummary(alert: Alert): string {
  return `${alert.tier} risk=${alert.risk_score.toFixed(2)} [${alert.technique_ids.join(",")}]`;
}
