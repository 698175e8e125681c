// Dashboard view-model: everything the DOM layer renders, kept free of DOM
// so it tests headlessly against a fixture server. The console never
// mutates server data locally: triage and approval POST/PATCH through the
// API and the next poll reconciles whatever the server decided.

import { ApiClient, ApiError } from "./api.js";
import { availableTransitions, canTriggerResponse, sortAlerts } from "./model/alerts.js";
import { fleetRows, type FleetRow } from "./model/fleet.js";
import { Poller } from "./poller.js";
import type {
  Alert, AlertStatus, EventRecord, ExecutedAction, PendingAction, ResponsesView,
} from "./types.js";

export interface ActionOutcomeRow {
  kind: string;
  target: string;
  success: boolean;
  durationMs: number;
  detail: string;
}

export class DashboardViewModel {
  alerts: Alert[] = [];
  fleet: FleetRow[] = [];
  responses: ResponsesView = { executed: [], pending: [] };
  timelineEvents: EventRecord[] = [];
  inlineError: string | null = null;
  lastActionResults: ActionOutcomeRow[] = [];
  needsLogin = false;

  readonly alertsPoller: Poller<Alert[]>;
  readonly fleetPoller: Poller<FleetRow[]>;
  readonly responsesPoller: Poller<ResponsesView>;

  constructor(
    private readonly api: ApiClient,
    pollIntervalMs = 2000,
    private readonly now: () => number = Date.now,
  ) {
    api.onAuthExpired = () => { this.needsLogin = true; };
    this.alertsPoller = new Poller(
      async () => sortAlerts((await api.listAlerts()).items),
      pollIntervalMs, (value) => { this.alerts = value; });
    this.fleetPoller = new Poller(
      async () => fleetRows((await api.listAgents()).items, this.now()),
      pollIntervalMs, (value) => { this.fleet = value; });
    this.responsesPoller = new Poller(
      () => api.listResponses(),
      pollIntervalMs, (value) => { this.responses = value; });
  }

  get role() {
    return this.api.role;
  }

  get staleData(): boolean {
    return this.alertsPoller.stale || this.fleetPoller.stale
      || this.responsesPoller.stale;
  }

  async pollOnce(): Promise<void> {
    await Promise.all([
      this.alertsPoller.tick(),
      this.fleetPoller.tick(),
      this.responsesPoller.tick(),
    ]);
  }

  /** Transitions the UI may offer for an alert; empty for viewers. */
  transitionsFor(alert: Alert): AlertStatus[] {
    return availableTransitions(this.api.role, alert.status);
  }

  get responseControlsVisible(): boolean {
    return canTriggerResponse(this.api.role);
  }

  pendingFor(alertId: string): PendingAction[] {
    return this.responses.pending.filter((p) => p.alert_id === alertId);
  }

  executedFor(alertId: string): ExecutedAction[] {
    return this.responses.executed.filter((e) => e.action.alert_id === alertId);
  }

  /** PATCH the transition, apply it optimistically, reconcile on next poll.
   * A 409 (concurrent triage) surfaces inline and forces a refresh. */
  async triageAlert(alertId: string, status: AlertStatus): Promise<boolean> {
    this.inlineError = null;
    const local = this.alerts.find((a) => a.id === alertId);
    try {
      const updated = await this.api.patchAlert(alertId, { status });
      if (local) Object.assign(local, updated);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.inlineError = `conflict: ${err.detail}`;
        await this.alertsPoller.tick();  // view refreshed with server truth
        return false;
      }
      if (err instanceof ApiError && err.status === 401) return false;
      this.inlineError = err instanceof Error ? err.message : String(err);
      return false;
    }
  }

  /** Approve pending actions; renders one success/failure + duration row
   * per action. Re-approving an already-applied effect is an idempotent
   * success on the server side. */
  async approveResponse(alertId: string, actionIds: string[]): Promise<ActionOutcomeRow[]> {
    this.inlineError = null;
    try {
      const doc = await this.api.approveActions(alertId, actionIds) as
        { executed: ExecutedAction[] };
      this.lastActionResults = doc.executed.map((e) => ({
        kind: e.action.kind,
        target: e.action.target,
        success: e.result.success,
        durationMs: e.result.duration_ms,
        detail: e.result.detail,
      }));
      await this.responsesPoller.tick();
      return this.lastActionResults;
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 401)) {
        this.inlineError = err instanceof Error ? err.message : String(err);
      }
      return [];
    }
  }

  async triggerPolicy(alertId: string): Promise<void> {
    this.inlineError = null;
    try {
      await this.api.triggerPolicy(alertId);
      await this.responsesPoller.tick();
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 401)) {
        this.inlineError = err instanceof Error ? err.message : String(err);
      }
    }
  }

  async loadTimeline(agentId: string): Promise<void> {
    this.timelineEvents = (await this.api.listEvents(
      { agent: agentId, limit: 200 })).items;
  }

  start(): void {
    this.alertsPoller.start();
    this.fleetPoller.start();
    this.responsesPoller.start();
  }

  stop(): void {
    this.alertsPoller.stop();
    this.fleetPoller.stop();
    this.responsesPoller.stop();
  }
}
