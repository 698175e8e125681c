import pytest

from edrkit.alerts import (
    Alert, AlertBuilder, AlertStatus, IllegalTransition, alert_from_dict,
    alert_id_for, alert_to_dict,
)
from edrkit.risk import compute_risk
from edrkit.rules import Detection, Engine, Severity

from conftest import BASE_TS, make_event


def _detection(offset=0.0, engine=Engine.SIGNATURE, score=1.0,
               techniques=("T1003",), evidence=("ev-x",),
               severity=Severity.CRITICAL):
    e = make_event(offset=offset)
    return Detection(engine=engine, score=score, technique_ids=tuple(techniques),
                     evidence=tuple(evidence), ts=e.ts, severity=severity), e


def test_lifecycle_legal_paths():
    alert = Alert(id="a", agent_id="agent-01", created_ts=BASE_TS)
    alert.transition(AlertStatus.ACKNOWLEDGED)
    alert.transition(AlertStatus.RESOLVED)
    assert alert.status is AlertStatus.RESOLVED

    direct = Alert(id="b", agent_id="agent-01", created_ts=BASE_TS)
    direct.transition(AlertStatus.FALSE_POSITIVE)
    assert direct.status is AlertStatus.FALSE_POSITIVE


def test_lifecycle_illegal_paths():
    alert = Alert(id="a", agent_id="agent-01", created_ts=BASE_TS)
    alert.transition(AlertStatus.RESOLVED)
    with pytest.raises(IllegalTransition):
        alert.transition(AlertStatus.OPEN)
    with pytest.raises(IllegalTransition):
        alert.transition(AlertStatus.ACKNOWLEDGED)


def test_builder_groups_by_agent_and_minute_bucket(taxonomy):
    builder = AlertBuilder(taxonomy)
    d1, e1 = _detection(offset=0.0)
    d2, e2 = _detection(offset=30.0, techniques=("T1547.001",), severity=Severity.MEDIUM)
    d3, e3 = _detection(offset=90.0)

    a1, created1, _ = builder.add("agent-01", d1, [e1], window_count=10)
    a2, created2, _ = builder.add("agent-01", d2, [e2], window_count=12)
    a3, created3, _ = builder.add("agent-01", d3, [e3], window_count=14)

    assert created1 and created3
    assert not created2  # same bucket as d1
    assert a1.id == a2.id != a3.id
    assert set(a2.technique_ids) == {"T1003", "T1547.001"}


def test_builder_dedups_identical_detections(taxonomy):
    builder = AlertBuilder(taxonomy)
    det, e = _detection()
    first, created, _ = builder.add("agent-01", det, [e], window_count=5)
    dup, created2, _ = builder.add("agent-01", det, [e], window_count=5)
    assert created and first is not None
    assert dup is None and not created2
    assert len(first.detections) == 1


def test_alert_ids_deterministic_from_content(taxonomy):
    assert alert_id_for("agent-01", 100) == alert_id_for("agent-01", 100)
    assert alert_id_for("agent-01", 100) != alert_id_for("agent-02", 100)


def test_risk_recomputes_from_stored_factors(taxonomy):
    builder = AlertBuilder(taxonomy)
    det, e = _detection()
    alert, _, _ = builder.add("agent-01", det, [e], window_count=50)
    assert alert.risk_score == compute_risk(alert.factors, builder.weights)
    assert alert.tier in ("low", "medium", "high", "critical")
    # critical severity detection drives the severity factor to 1.0
    assert alert.factors.severity_score == 1.0
    assert alert.factors.frequency_score == 0.5


def test_technique_impact_augments_severity(taxonomy):
    builder = AlertBuilder(taxonomy)
    # rule severity low, but T1003 carries critical impact in the taxonomy
    det, e = _detection(severity=Severity.LOW)
    alert, _, _ = builder.add("agent-01", det, [e], window_count=0)
    assert alert.factors.severity_score == 1.0


def test_anomaly_factor_tracks_max_anomaly_score(taxonomy):
    builder = AlertBuilder(taxonomy)
    d1, e1 = _detection(engine=Engine.ANOMALY, score=0.7, techniques=(),
                        severity=Severity.MEDIUM)
    d2, e2 = _detection(engine=Engine.ANOMALY, score=0.9, techniques=(),
                        severity=Severity.MEDIUM, offset=10.0, evidence=("ev-y",))
    alert, _, _ = builder.add("agent-01", d1, [e1], window_count=10)
    alert, _, _ = builder.add("agent-01", d2, [e2], window_count=10)
    assert alert.factors.anomaly_score == 0.9


def test_escalation_flag_on_tier_raise(taxonomy):
    builder = AlertBuilder(taxonomy)
    weak, e1 = _detection(engine=Engine.CLASSIFIER, score=0.2, techniques=("T1012",),
                          severity=Severity.LOW)
    strong, e2 = _detection(offset=5.0, evidence=("ev-z",))
    a1, created, escalated1 = builder.add("agent-01", weak, [e1], window_count=0)
    assert created and not escalated1
    a2, _, escalated2 = builder.add("agent-01", strong, [e2], window_count=80)
    assert a2 is a1
    assert escalated2


def test_subject_user_skips_system_accounts(taxonomy):
    builder = AlertBuilder(taxonomy)
    det, _ = _detection()
    system_event = make_event(user="SYSTEM")
    alice_event = make_event(user="alice")
    alert, _, _ = builder.add("agent-01", det, [system_event, alice_event], 0)
    assert alert.subject_user == "alice"


def test_alert_serialization_roundtrip(taxonomy):
    builder = AlertBuilder(taxonomy)
    det, e = _detection()
    alert, _, _ = builder.add("agent-01", det, [e], window_count=25)
    alert.notes.append("checked")
    alert.assignee = "bob"
    doc = alert_to_dict(alert)
    again = alert_from_dict(doc)
    assert again.id == alert.id
    assert again.factors == alert.factors
    assert again.risk_score == alert.risk_score
    assert again.technique_ids == alert.technique_ids
    assert [d.evidence for d in again.detections] == [d.evidence for d in alert.detections]
    assert again.notes == ["checked"]
