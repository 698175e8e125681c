"""Streaming local pipeline: noise filter, dedup, sliding window, the four
detection engines, alert grouping with risk scoring, and policy-driven
response execution.

One LocalPipeline instance serves one stream of events (any number of
agents, windowed independently per agent) with a single writer; distinct
streams can run in parallel with their own instances. Immutable inputs
(taxonomy, rules, trained model) are shared freely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .alerts import Alert, AlertBuilder
from .classifier import GuardedClassifier, RuleBasedClassifier
from .correlation import CorrelationMatcher
from .events import SystemEvent
from .features import extract_features
from .forest import IsolationForestModel, anomaly_score
from .ingest import NoiseFilter, NoiseRule, PipelineConfig, WindowStats, dedup, update_window
from .respond import ActionResult, Actuator, PolicyMode, ResponseAction, ResponsePolicy, select_actions
from .risk import DEFAULT_WEIGHTS, ProfileStore, RiskWeights
from .rules import Detection, Engine, RuleSet, Severity, match_signatures
from .taxonomy import Taxonomy

logger = logging.getLogger(__name__)

_EVIDENCE_EVENTS_PER_ALERT = 256


@dataclass
class PipelineCounters:
    read: int = 0
    kept: int = 0
    dropped_noise: int = 0
    dropped_dup: int = 0
    late: int = 0
    detections: int = 0
    alerts: int = 0
    actions_executed: int = 0
    actions_pending: int = 0

    def conservation_holds(self, skipped_malformed: int = 0, lines_read: int | None = None) -> bool:
        total = self.read + skipped_malformed
        expected = self.kept + self.dropped_noise + self.dropped_dup + skipped_malformed
        if lines_read is not None and lines_read != total:
            return False
        return total == expected

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


@dataclass
class ProcessOutcome:
    kept: bool
    drop_reason: str | None = None
    detections: list[Detection] = field(default_factory=list)
    alerts: list[Alert] = field(default_factory=list)
    executed: list[tuple[ResponseAction, ActionResult]] = field(default_factory=list)


class LocalPipeline:
    def __init__(
        self,
        taxonomy: Taxonomy,
        ruleset: RuleSet,
        config: PipelineConfig | None = None,
        noise_rules: list[NoiseRule] | None = None,
        model: IsolationForestModel | None = None,
        classifier=None,
        policy: ResponsePolicy | None = None,
        actuator: Actuator | None = None,
        weights: RiskWeights = DEFAULT_WEIGHTS,
        profiles: ProfileStore | None = None,
    ):
        self.taxonomy = taxonomy
        self.ruleset = ruleset
        self.config = config or PipelineConfig()
        self.noise = NoiseFilter(noise_rules or [])
        self.model = model
        if classifier is None and self.config.classifier_enabled:
            classifier = RuleBasedClassifier()
        self.classifier = (
            GuardedClassifier(classifier, budget_ms=self.config.classifier_budget_ms)
            if classifier is not None else None
        )
        self.policy = policy
        self.actuator = actuator
        self.builder = AlertBuilder(
            taxonomy, weights=weights, profiles=profiles,
            frequency_threshold=self.config.frequency_threshold,
        )
        self.counters = PipelineCounters()
        self.pending_actions: list[ResponseAction] = []

        self._stats: dict[str, WindowStats] = {}
        self._correlators: dict[str, CorrelationMatcher] = {}
        self._since_score: dict[str, int] = {}
        self._alert_evidence: dict[str, list[SystemEvent]] = {}
        self._alert_dispatched: dict[str, set] = {}

    # -- per-agent state ---------------------------------------------------

    def stats_for(self, agent_id: str) -> WindowStats:
        stats = self._stats.get(agent_id)
        if stats is None:
            stats = WindowStats(agent_id, self.config.window_seconds,
                                self.config.max_window_events)
            self._stats[agent_id] = stats
        return stats

    def _correlator_for(self, agent_id: str) -> CorrelationMatcher:
        matcher = self._correlators.get(agent_id)
        if matcher is None:
            matcher = CorrelationMatcher(self.ruleset.correlations)
            self._correlators[agent_id] = matcher
        return matcher

    # -- processing --------------------------------------------------------

    def process(self, e: SystemEvent) -> ProcessOutcome:
        self.counters.read += 1

        reason = self.noise.check(e)
        if reason is not None:
            self.counters.dropped_noise += 1
            return ProcessOutcome(kept=False, drop_reason=f"noise:{reason}")

        stats = self.stats_for(e.agent_id)
        if dedup(e, stats, self.config.dedup_horizon):
            self.counters.dropped_dup += 1
            return ProcessOutcome(kept=False, drop_reason="duplicate")

        self.counters.kept += 1
        if not update_window(stats, e):
            self.counters.late += 1

        detections = match_signatures(e, self.ruleset.signatures)
        detections.extend(self._correlator_for(e.agent_id).feed(e))

        self._since_score[e.agent_id] = self._since_score.get(e.agent_id, 0) + 1
        if self._since_score[e.agent_id] >= self.config.score_interval:
            self._since_score[e.agent_id] = 0
            detections.extend(self._evaluate_window(stats))

        return self._fold(e.agent_id, detections, stats)

    def _evaluate_window(self, stats: WindowStats) -> list[Detection]:
        detections: list[Detection] = []
        if not stats.ring:
            return detections
        if self.model is not None:
            fv = extract_features(list(stats.ring), self.config.window_seconds,
                                  agent_id=stats.agent_id)
            score = anomaly_score(self.model, fv)
            if score >= self.config.anomaly_threshold:
                detections.append(Detection(
                    engine=Engine.ANOMALY, score=score, technique_ids=(),
                    evidence=tuple(e.id for e in stats.ring),
                    ts=stats.ring[-1].ts,
                    severity=Severity.HIGH if score >= 0.8 else Severity.MEDIUM,
                ))
        if self.classifier is not None:
            detections.extend(self.classifier.classify(stats))
        return detections

    def _fold(self, agent_id: str, detections: list[Detection],
              stats: WindowStats) -> ProcessOutcome:
        outcome = ProcessOutcome(kept=True, detections=detections)
        if not detections:
            return outcome

        ring_index = {e.id: e for e in stats.ring}
        window_count = len(stats.ring)
        touched: dict[str, tuple[Alert, bool]] = {}

        for det in detections:
            ev_events = [ring_index[i] for i in det.evidence if i in ring_index]
            alert, created, escalated = self.builder.add(
                agent_id, det, ev_events, window_count)
            if alert is None:
                continue
            self.counters.detections += 1
            if created:
                self.counters.alerts += 1
            cache = self._alert_evidence.setdefault(alert.id, [])
            known = {e.id for e in cache}
            for ev in ev_events:
                if ev.id not in known and len(cache) < _EVIDENCE_EVENTS_PER_ALERT:
                    cache.append(ev)
                    known.add(ev.id)
            prev = touched.get(alert.id)
            touched[alert.id] = (alert, (prev[1] if prev else False) or created or escalated)

        for alert, needs_dispatch in touched.values():
            outcome.alerts.append(alert)
            if self.policy is not None and self.actuator is not None:
                outcome.executed.extend(self._dispatch(alert))
        return outcome

    def _dispatch(self, alert: Alert) -> list[tuple[ResponseAction, ActionResult]]:
        evidence = self._alert_evidence.get(alert.id, [])
        dispatched = self._alert_dispatched.setdefault(alert.id, set())
        executed: list[tuple[ResponseAction, ActionResult]] = []
        for action in select_actions(alert, self.policy, evidence, self.taxonomy):
            key = (action.kind, action.target)
            if key in dispatched:
                continue
            dispatched.add(key)
            if action.mode == PolicyMode.APPROVAL_REQUIRED:
                self.pending_actions.append(action)
                self.counters.actions_pending += 1
                continue
            result = self.actuator.execute(action)
            self.counters.actions_executed += 1
            executed.append((action, result))
        return executed

    def finish(self) -> list[ProcessOutcome]:
        """Run a final window evaluation per agent to catch stream tails."""
        outcomes = []
        for agent_id, stats in self._stats.items():
            if self._since_score.get(agent_id, 0) == 0:
                continue
            self._since_score[agent_id] = 0
            detections = self._evaluate_window(stats)
            if detections:
                outcomes.append(self._fold(agent_id, detections, stats))
        return outcomes

    @property
    def alerts(self) -> dict[str, Alert]:
        return self.builder.alerts

    def classifier_degraded(self) -> bool:
        return bool(self.classifier is not None and self.classifier.degraded)
