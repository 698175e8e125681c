"""Alert model, triage lifecycle, and grouping of detections into alerts.

Detections sharing an agent and a 60 s correlation bucket collapse into one
alert, which accumulates evidence and recomputes its risk score as engines
contribute. Alert ids derive from (agent, bucket), so replaying the same
event log reproduces the same alert set byte for byte.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

from .events import SystemEvent, format_timestamp, parse_timestamp
from .risk import (
    DEFAULT_WEIGHTS,
    ProfileStore,
    RiskFactors,
    RiskWeights,
    classify_risk,
    compute_risk,
    frequency_score,
    severity_score,
)
from .rules import Detection, Engine, Severity
from .taxonomy import Taxonomy

_ALERT_NS = uuid.UUID("4f9be1a8-52c3-4c27-8e49-0d1a2b3c4d5e")

GROUP_WINDOW_SECONDS = 60.0


class AlertStatus(str, Enum):
    OPEN = "open"
    ACKNOWLEDGED = "acknowledged"
    RESOLVED = "resolved"
    FALSE_POSITIVE = "false_positive"


LEGAL_TRANSITIONS: dict[AlertStatus, frozenset[AlertStatus]] = {
    AlertStatus.OPEN: frozenset({AlertStatus.ACKNOWLEDGED, AlertStatus.RESOLVED,
                                 AlertStatus.FALSE_POSITIVE}),
    AlertStatus.ACKNOWLEDGED: frozenset({AlertStatus.RESOLVED, AlertStatus.FALSE_POSITIVE}),
    AlertStatus.RESOLVED: frozenset(),
    AlertStatus.FALSE_POSITIVE: frozenset(),
}


class IllegalTransition(ValueError):
    pass


@dataclass
class Alert:
    id: str
    agent_id: str
    created_ts: datetime
    detections: list[Detection] = field(default_factory=list)
    risk_score: float = 0.0
    tier: str = "low"
    technique_ids: tuple[str, ...] = ()
    status: AlertStatus = AlertStatus.OPEN
    assignee: str | None = None
    notes: list[str] = field(default_factory=list)
    factors: RiskFactors = field(default_factory=RiskFactors)
    evidence_ids: tuple[str, ...] = ()
    subject_user: str = ""

    def transition(self, new_status: AlertStatus) -> None:
        if new_status not in LEGAL_TRANSITIONS[self.status]:
            raise IllegalTransition(
                f"alert {self.id}: {self.status.value} -> {new_status.value} is not allowed"
            )
        self.status = new_status


def detection_to_dict(d: Detection) -> dict:
    return {
        "engine": d.engine.value,
        "score": d.score,
        "technique_ids": list(d.technique_ids),
        "evidence": list(d.evidence),
        "ts": format_timestamp(d.ts),
        "severity": d.severity.value,
    }


def detection_from_dict(doc: dict) -> Detection:
    return Detection(
        engine=Engine(doc["engine"]), score=float(doc["score"]),
        technique_ids=tuple(doc["technique_ids"]), evidence=tuple(doc["evidence"]),
        ts=parse_timestamp(doc["ts"]), severity=Severity(doc["severity"]),
    )


def alert_to_dict(a: Alert) -> dict:
    return {
        "id": a.id,
        "agent_id": a.agent_id,
        "created_ts": format_timestamp(a.created_ts),
        "detections": [detection_to_dict(d) for d in a.detections],
        "risk_score": a.risk_score,
        "tier": a.tier,
        "technique_ids": list(a.technique_ids),
        "status": a.status.value,
        "assignee": a.assignee,
        "notes": list(a.notes),
        "factors": a.factors.as_dict(),
        "evidence_ids": list(a.evidence_ids),
        "subject_user": a.subject_user,
    }


def alert_from_dict(doc: dict) -> Alert:
    return Alert(
        id=doc["id"],
        agent_id=doc["agent_id"],
        created_ts=parse_timestamp(doc["created_ts"]),
        detections=[detection_from_dict(d) for d in doc.get("detections", [])],
        risk_score=float(doc["risk_score"]),
        tier=doc["tier"],
        technique_ids=tuple(doc.get("technique_ids", ())),
        status=AlertStatus(doc.get("status", "open")),
        assignee=doc.get("assignee"),
        notes=list(doc.get("notes", [])),
        factors=RiskFactors(**doc.get("factors", {})),
        evidence_ids=tuple(doc.get("evidence_ids", ())),
        subject_user=doc.get("subject_user", ""),
    )


def alert_id_for(agent_id: str, bucket: int) -> str:
    return str(uuid.uuid5(_ALERT_NS, f"{agent_id}|{bucket}"))


class AlertBuilder:
    """Groups detections into per-(agent, 60 s bucket) alerts and keeps each
    alert's risk factors current. Single writer per agent stream."""

    def __init__(self, taxonomy: Taxonomy, weights: RiskWeights = DEFAULT_WEIGHTS,
                 profiles: ProfileStore | None = None,
                 frequency_threshold: int = 100,
                 group_window: float = GROUP_WINDOW_SECONDS):
        self.taxonomy = taxonomy
        self.weights = weights
        self.profiles = profiles or ProfileStore()
        self.frequency_threshold = frequency_threshold
        self.group_window = group_window
        self.alerts: dict[str, Alert] = {}
        self._seen_fingerprints: dict[str, set] = {}

    def add(self, agent_id: str, detection: Detection,
            evidence_events: list[SystemEvent],
            window_count: int) -> tuple[Alert | None, bool, bool]:
        """Fold one detection into its alert.

        Returns (alert, created, escalated); alert is None when the detection
        is an exact duplicate of one already folded in.
        """
        bucket = int(detection.ts.timestamp() // self.group_window)
        aid = alert_id_for(agent_id, bucket)

        fingerprint = (detection.engine, detection.technique_ids, detection.evidence)
        seen = self._seen_fingerprints.setdefault(aid, set())
        if fingerprint in seen:
            return None, False, False
        seen.add(fingerprint)

        created = aid not in self.alerts
        if created:
            alert = Alert(id=aid, agent_id=agent_id, created_ts=detection.ts)
            self.alerts[aid] = alert
        else:
            alert = self.alerts[aid]

        alert.detections.append(detection)
        alert.technique_ids = tuple(sorted(
            set(alert.technique_ids) | set(detection.technique_ids)
        ))
        alert.evidence_ids = tuple(dict.fromkeys(
            (*alert.evidence_ids, *detection.evidence)
        ))
        if not alert.subject_user:
            for e in evidence_events:
                user = e.subject.user
                if user and user.lower() not in ("system", "root"):
                    alert.subject_user = user
                    break

        old_tier = alert.tier
        self._recompute(alert, window_count)
        escalated = _tier_rank(alert.tier) > _tier_rank(old_tier) and not created
        return alert, created, escalated

    def _recompute(self, alert: Alert, window_count: int) -> None:
        anomaly = max(
            (d.score for d in alert.detections if d.engine == Engine.ANOMALY),
            default=0.0,
        )
        severity = 0.0
        for d in alert.detections:
            impacts = [
                imp.value for tid in d.technique_ids
                if (imp := self.taxonomy.impact_of(tid)) is not None
            ]
            top_impact = max(impacts, key=_severity_rank) if impacts else None
            severity = max(severity, severity_score(d.severity.value, top_impact))
        alert.factors = RiskFactors(
            anomaly_score=anomaly,
            frequency_score=frequency_score(window_count, self.frequency_threshold),
            severity_score=severity,
            asset_criticality=self.profiles.asset_criticality(alert.agent_id),
            user_risk=self.profiles.user_risk(alert.subject_user),
        )
        alert.risk_score = compute_risk(alert.factors, self.weights)
        alert.tier = classify_risk(alert.risk_score)


def _tier_rank(tier: str) -> int:
    return ("low", "medium", "high", "critical").index(tier)


def _severity_rank(level: str) -> int:
    return ("low", "medium", "high", "critical").index(level)
