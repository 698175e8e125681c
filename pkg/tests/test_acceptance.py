"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest tests/test_acceptance.py -v -s`).

Every tolerance is pinned here, not deferred: risk arithmetic 1e-12, c(256)
within 1e-3, AUC >= 0.95, throughput >= 1000 events/s, p50 latency < 2000 ms,
fuzz rejection 10,000/10,000, scenario recall >= 0.8.
"""

from __future__ import annotations

import json
import random
import time
from collections import Counter

import numpy as np
import pytest
from fastapi.testclient import TestClient

from edrkit.agentd import Agent, AgentConfig, SourceSpec
from edrkit.alerts import alert_to_dict
from edrkit.events import event_to_dict, event_to_json
from edrkit.forest import anomaly_score, c, train_forest
from edrkit.harness import (
    _train_baseline_model, cmd_eval, cmd_synth, confusion_metrics,
    evaluate_alerts, run_bench,
)
from edrkit.ingest import ReplaySource, WindowStats, update_window
from edrkit.pipeline import LocalPipeline
from edrkit.protocol import (
    AgentCredentials, Envelope, VerifyState, sign_envelope, verify_envelope,
)
from edrkit.risk import RiskFactors, RiskWeights, compute_risk
from edrkit.server import ServerConfig, ServerState, create_app
from edrkit.synth import synth_source

from conftest import make_event


def _report(name: str):
    print(f"\n[ACCEPTANCE] PASS - {name}")


# -- 1. risk formula exactness ---------------------------------------------------


def test_risk_formula_exactness():
    started = time.perf_counter()
    rng = random.Random(20250317)
    for _ in range(1000):
        f = RiskFactors(*(rng.random() for _ in range(5)))
        independent = (0.3 * f.anomaly_score + 0.2 * f.frequency_score
                       + 0.25 * f.severity_score + 0.15 * f.asset_criticality
                       + 0.1 * f.user_risk)
        assert abs(compute_risk(f) - independent) <= 1e-12

    with pytest.raises(ValueError, match="sum to 1.0"):
        RiskWeights(anomaly=0.3, frequency=0.2, severity=0.25,
                    asset_criticality=0.15, user_risk=0.05)
    # the server enforces the same invariant at startup
    with pytest.raises(ValueError, match="sum to 1.0"):
        ServerState(ServerConfig(data_dir="/tmp/edrkit-acc-reject",
                                 weights={"anomaly": 0.5, "frequency": 0.2,
                                          "severity": 0.25,
                                          "asset_criticality": 0.15,
                                          "user_risk": 0.1}))
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"risk exactness check took {elapsed:.2f}s (budget 1s)"
    _report("risk formula exactness (1000 vectors, 1e-12; bad weights rejected)")


# -- 2. isolation forest quality ---------------------------------------------------


def test_isolation_forest_quality():
    started = time.perf_counter()
    rng = np.random.default_rng(20250317)
    inliers = np.clip(rng.normal(0.5, 0.02, size=(1000, 45)), 0.0, 1.0)
    outliers = rng.uniform(size=(20, 45))
    data = np.vstack([inliers, outliers])

    model_a = train_forest(data, n_trees=100, psi=256, seed=99)
    model_b = train_forest(data, n_trees=100, psi=256, seed=99)

    scores_in = [anomaly_score(model_a, x) for x in inliers]
    scores_out = [anomaly_score(model_a, x) for x in outliers]
    again_in = [anomaly_score(model_b, x) for x in inliers]
    again_out = [anomaly_score(model_b, x) for x in outliers]
    assert scores_in == again_in and scores_out == again_out  # bit-identical

    assert np.mean(scores_out) > np.mean(scores_in)

    from edrkit.harness import auc_score
    auc = auc_score(scores_out, scores_in)
    assert auc >= 0.95, f"ranking AUC {auc:.4f} below 0.95"

    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"forest quality check took {elapsed:.1f}s (budget 30s)"
    _report(f"isolation forest quality (AUC {auc:.3f} >= 0.95, deterministic)")


# -- 3. isolation forest math ------------------------------------------------------


def test_isolation_forest_math():
    assert c(1) == 0.0
    assert c(2) == 1.0
    assert c(256) == pytest.approx(10.2448, abs=1e-3)

    # identical vectors make every tree a single leaf of size psi, so any
    # probe walks 0 edges and E(h) = c(psi) exactly
    data = np.tile(0.5, (400, 45))
    model = train_forest(data, n_trees=20, psi=256, seed=5)
    score = anomaly_score(model, np.tile(0.9, 45))
    assert score == 0.5
    _report("isolation forest math (c values; E(h)=c(psi) probe scores 0.5)")


# -- 4. throughput and latency ------------------------------------------------------


def test_throughput_and_latency():
    started = time.perf_counter()
    report = run_bench(100_000, seed=7, scenario="credential_theft",
                       anomaly_frac=0.02)
    elapsed = time.perf_counter() - started
    assert report.events_per_second >= 1000.0, (
        f"throughput {report.events_per_second:.0f} events/s below 1000")
    assert report.latency_samples >= 1
    assert report.latency_ms["p50"] < 2000.0, (
        f"p50 latency {report.latency_ms['p50']:.1f} ms not below 2 s")
    assert elapsed < 300.0, f"bench took {elapsed:.0f}s (budget 5 min)"
    _report(f"throughput {report.events_per_second:,.0f} events/s >= 1000; "
            f"p50 {report.latency_ms['p50']:.2f} ms < 2000 ms")


# -- 5. protocol integrity ----------------------------------------------------------


def test_protocol_integrity():
    import hashlib
    import hmac as hmac_mod

    # RFC 4231 test case 2
    digest = hmac_mod.new(b"Jefe", b"what do ya want for nothing?",
                          hashlib.sha256).hexdigest()
    assert digest == ("5bdcc146bf60754e6a042426089575c7"
                      "5a003f089d2739839dec58b964ec3843")

    creds = AgentCredentials(agent_id="agent-01", shared_secret=bytes(range(32)))
    now_ms = 1_750_000_000_000
    env = sign_envelope(b'{"kind":"events","items":[]}', creds, seq=1,
                        ts=now_ms, nonce="ab" * 16)

    rng = random.Random(20250317)
    rejected = 0
    trials = 10_000
    for _ in range(trials):
        doc = env.to_dict()
        field = rng.choice(["v", "agent_id", "seq", "ts", "nonce", "body", "mac"])
        if isinstance(doc[field], int):
            doc[field] ^= 1 << rng.randrange(16)
        else:
            raw = bytearray(doc[field].encode("utf-8"))
            raw[rng.randrange(len(raw))] ^= 1 << rng.randrange(8)
            doc[field] = raw.decode("utf-8", "replace")
        verdict = verify_envelope(Envelope.from_dict(doc), creds,
                                  VerifyState(), now_ms=now_ms)
        rejected += 0 if verdict.accepted else 1
    assert rejected == trials, f"fuzz: only {rejected}/{trials} flips rejected"

    # distinct rejection reasons for replay classes
    state = VerifyState()
    assert verify_envelope(env, creds, state, now_ms=now_ms).accepted
    stale = verify_envelope(env, creds, state, now_ms=now_ms)
    assert (not stale.accepted) and stale.reason == "stale_seq"
    fresh_seq_same_nonce = sign_envelope(b"x", creds, seq=2, ts=now_ms,
                                         nonce="ab" * 16)
    replayed = verify_envelope(fresh_seq_same_nonce, creds, state, now_ms=now_ms)
    assert (not replayed.accepted) and replayed.reason == "replayed_nonce"
    _report(f"protocol integrity (RFC 4231 vector; {trials}/{trials} bit flips "
            "rejected; stale_seq and replayed_nonce distinct)")


# -- 6. pipeline conservation --------------------------------------------------------


def test_pipeline_conservation(tmp_path, taxonomy, ruleset, noise_rules):
    # corpus with noise-rule targets, duplicate keys, and malformed lines
    lines = [event_to_json(e) for e in synth_source("ransomware", 3000, 0.05, 13)]
    lines.insert(100, '{"id": "broken-1"')
    lines.insert(2000, "not json at all")
    path = tmp_path / "replay.jsonl"
    path.write_text("\n".join(lines) + "\n")

    source = ReplaySource(path)
    pipe = LocalPipeline(taxonomy, ruleset, noise_rules=noise_rules)
    for event in source:
        pipe.process(event)
    pipe.finish()

    counters = pipe.counters
    read_lines = source.counters.lines_read
    skipped = source.counters.skipped_malformed
    assert read_lines == 3002
    assert skipped == 2
    assert counters.dropped_noise > 0 and counters.dropped_dup > 0
    assert read_lines == (counters.kept + counters.dropped_noise
                          + counters.dropped_dup + skipped)

    # window counts equal a brute-force recount oracle after every insert
    rng = random.Random(4)
    stats = WindowStats("agent-01", window_seconds=60.0)
    choices = [("process", "create"), ("file", "modify"), ("network", "connect"),
               ("registry", "set_value"), ("user", "logon")]
    for i in range(500):
        category, action = choices[i % len(choices)]
        update_window(stats, make_event(offset=rng.uniform(0, 240),
                                        category=category, action=action, pid=i))
        oracle = Counter((e.category, e.action) for e in stats.ring)
        assert dict(oracle) == stats.counts
    _report("pipeline conservation (read == kept + noise + dup + skipped; "
            "window counts match brute-force recount)")


# -- 7. end-to-end scenario ------------------------------------------------------------


def test_end_to_end_credential_theft(tmp_path):
    started = time.perf_counter()
    corpus = tmp_path / "corpus"
    cmd_synth("credential_theft", 1000, 0.05, 42, corpus)

    from edrkit.forest import save_model
    model_path = tmp_path / "model.json"
    save_model(_train_baseline_model(seed=7), model_path)

    config = AgentConfig(
        agent_id="agent-01", server_url=None, mode="local",
        source=SourceSpec(type="replay", path=str(corpus / "full.jsonl")),
        state_dir=str(tmp_path / "agent"), model_path=str(model_path),
    )
    agent = Agent(config, sleep=lambda _s: None)
    summary = agent.run()

    assert summary.conservation_ok()
    alerts = list(agent.pipeline.alerts.values())
    assert alerts, "scenario must raise at least one alert"
    scenario_techniques = {"T1003", "T1003.001", "T1059.001", "T1547.001", "T1041"}
    tagged = {t for a in alerts for t in a.technique_ids}
    assert tagged & scenario_techniques, f"no scenario technique among {tagged}"
    assert all(a.tier in ("low", "medium", "high", "critical") for a in alerts)

    # default policy must have produced executed ledger effects
    assert summary.actions_executed >= 1
    ledger = agent.pipeline.actuator.ledger.snapshot()
    assert any(ledger.values()), "no ledger effects executed"

    alerts_path = tmp_path / "alerts.jsonl"
    alerts_path.write_text("\n".join(json.dumps(alert_to_dict(a)) for a in alerts))
    report = cmd_eval(alerts_path, corpus / "full.jsonl")
    assert report.overall["recall"] >= 0.8, (
        f"recall {report.overall['recall']:.3f} below 0.8")

    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"end-to-end run took {elapsed:.1f}s (budget 60s)"
    _report(f"end-to-end credential theft (alerts tagged, ledger effects, "
            f"recall {report.overall['recall']:.2f} >= 0.8)")


# -- 8. eval oracle equivalence -----------------------------------------------------------


def test_eval_oracle_equivalence():
    rng = random.Random(20250317)
    truth = [{"id": f"e{i}",
              "label": "benign" if rng.random() < 0.92
              else rng.choice(["T1003", "T1110", "T1486"])}
             for i in range(10_000)]
    alerts = []
    for _ in range(60):
        ids = [f"e{rng.randrange(10_000)}" for _ in range(rng.randrange(1, 80))]
        alerts.append({"technique_ids": [rng.choice(["T1003", "T1110", "T1486"])],
                       "evidence_ids": ids})

    report = evaluate_alerts(alerts, truth)

    covered = {eid for a in alerts for eid in a["evidence_ids"]}
    tp = sum(1 for d in truth if d["label"] != "benign" and d["id"] in covered)
    fn = sum(1 for d in truth if d["label"] != "benign" and d["id"] not in covered)
    fp = sum(1 for d in truth if d["label"] == "benign" and d["id"] in covered)
    tn = sum(1 for d in truth if d["label"] == "benign" and d["id"] not in covered)
    assert (report.tp, report.fp, report.tn, report.fn) == (tp, fp, tn, fn)
    assert report.overall == confusion_metrics(tp, fp, tn, fn)

    worked = confusion_metrics(tp=9, fp=1, tn=89, fn=1)
    assert worked["precision"] == pytest.approx(0.9)
    assert worked["recall"] == pytest.approx(0.9)
    assert worked["f1"] == pytest.approx(0.9)
    assert worked["accuracy"] == pytest.approx(0.98)
    assert worked["fpr"] == pytest.approx(0.0111, abs=1e-4)
    _report("eval oracle equivalence (10,000 events exact; worked example "
            "precision 0.9 / accuracy 0.98 / fpr 0.0111)")


# -- 9. API contract ---------------------------------------------------------------------


def test_api_contract(tmp_path):
    boot = "acceptance-boot"
    config = ServerConfig(data_dir=str(tmp_path / "srv"), bootstrap_token=boot,
                          admin_user="root", admin_password="rootpw")
    state = ServerState(config)
    client = TestClient(create_app(state=state))

    def login(user, pw):
        resp = client.post("/api/v1/auth/login", json={"user": user, "password": pw})
        assert resp.status_code == 200
        return {"Authorization": f"Bearer {resp.json()['token']}"}

    admin = login("root", "rootpw")

    # group 1: authentication
    assert client.post("/api/v1/auth/register",
                       json={"user": "ana", "password": "pw", "role": "analyst"},
                       headers=admin).status_code == 201
    assert client.post("/api/v1/auth/register",
                       json={"user": "vee", "password": "pw", "role": "viewer"},
                       headers=admin).status_code == 201
    analyst = login("ana", "pw")
    viewer = login("vee", "pw")

    # unauthenticated access rejected across route groups
    for method, path in [("GET", "/api/v1/agents"), ("GET", "/api/v1/assets"),
                         ("GET", "/api/v1/events"), ("GET", "/api/v1/alerts"),
                         ("POST", "/api/v1/risk/score"),
                         ("GET", "/api/v1/responses"),
                         ("GET", "/api/v1/ml/status")]:
        assert client.request(method, path, json={}).status_code == 401

    # group 2: agent management (enroll + list + config)
    resp = client.post("/api/v1/agents/enroll",
                       json={"agent_id": "agent-01", "enrollment_token": boot})
    assert resp.status_code == 201
    creds = AgentCredentials(agent_id="agent-01",
                             shared_secret=bytes.fromhex(resp.json()["shared_secret"]))
    assert client.get("/api/v1/agents", headers=admin).status_code == 200
    assert client.put("/api/v1/agents/agent-01/config", json={"mode": "forward"},
                      headers=admin).status_code == 200

    # group 3: asset management
    assert client.put("/api/v1/assets",
                      json={"asset_id": "ws-01", "agent_id": "agent-01",
                            "criticality": 0.9},
                      headers=admin).status_code == 200
    assert client.get("/api/v1/assets", headers=viewer).status_code == 200
    assert client.get("/api/v1/assets/ws-01/status",
                      headers=viewer).status_code == 200

    # group 4: event management (signed envelope + query)
    from edrkit.protocol import sign_json_envelope
    padding = [make_event(offset=i * 0.1, pid=2000 + i) for i in range(110)]
    attack = [
        make_event(offset=12.0, image="C:\\Users\\u\\AppData\\Local\\Temp\\mimikatz.exe",
                   cmdline='mimikatz.exe "sekurlsa::logonpasswords"', signed=False,
                   obj="C:\\Users\\u\\AppData\\Local\\Temp\\mimikatz.exe", pid=777),
        make_event(offset=15.0, category="file", action="create",
                   obj="C:\\Users\\u\\AppData\\Local\\Temp\\lsass_0.dmp", pid=777),
        make_event(offset=18.0, category="network", action="connect",
                   obj="203.0.113.77:4443", bytes_out=1_000_000, pid=777),
    ]
    env = sign_json_envelope(
        {"kind": "events", "items": [event_to_dict(e) for e in padding + attack]},
        creds, seq=1)
    resp = client.post("/api/v1/events", json=env.to_dict())
    assert resp.status_code == 200
    alert_ids = resp.json()["alert_ids"]
    assert alert_ids
    assert client.get("/api/v1/events", params={"category": "network"},
                      headers=viewer).status_code == 200

    # group 5: alert management (+ 409 on illegal transition)
    listing = client.get("/api/v1/alerts", headers=viewer)
    assert listing.status_code == 200
    alert_id = alert_ids[0]
    assert client.patch(f"/api/v1/alerts/{alert_id}",
                        json={"status": "acknowledged"},
                        headers=analyst).status_code == 200
    assert client.patch(f"/api/v1/alerts/{alert_id}", json={"status": "resolved"},
                        headers=analyst).status_code == 200
    illegal = client.patch(f"/api/v1/alerts/{alert_id}", json={"status": "open"},
                           headers=analyst)
    assert illegal.status_code == 409

    # group 6: risk assessment
    score = client.post("/api/v1/risk/score",
                        json={"factors": {"anomaly_score": 0.8,
                                          "frequency_score": 0.5,
                                          "severity_score": 0.6,
                                          "asset_criticality": 1.0,
                                          "user_risk": 0.2}},
                        headers=viewer)
    assert score.status_code == 200
    assert score.json()["score"] == pytest.approx(0.66, abs=1e-12)
    assert client.get("/api/v1/risk/assets/ws-01", headers=viewer).status_code == 200

    # group 7: response management (viewer forbidden, analyst allowed)
    deny = client.post("/api/v1/responses", json={"alert_id": alert_id},
                       headers=viewer)
    assert deny.status_code == 403
    allow = client.post("/api/v1/responses", json={"alert_id": alert_id},
                        headers=analyst)
    assert allow.status_code == 200
    assert client.get("/api/v1/responses", params={"alert_id": alert_id},
                      headers=viewer).status_code == 200

    # group 8: machine learning
    assert client.get("/api/v1/ml/status", headers=viewer).status_code == 200
    assert client.get("/api/v1/ml/metrics", headers=viewer).status_code == 200
    predict = client.post("/api/v1/ml/predict", json={"values": [0.0] * 45},
                          headers=viewer)
    assert predict.status_code == 503  # no model loaded in this deployment

    # restart + replay reproduces the alert set
    state2 = ServerState(ServerConfig(data_dir=str(tmp_path / "srv"),
                                      bootstrap_token=boot, admin_user="root",
                                      admin_password="rootpw"))
    client2 = TestClient(create_app(state=state2))
    admin2 = None
    resp = client2.post("/api/v1/auth/login",
                        json={"user": "root", "password": "rootpw"})
    admin2 = {"Authorization": f"Bearer {resp.json()['token']}"}
    first = client.get("/api/v1/alerts", headers=admin).json()["items"]
    second = client2.get("/api/v1/alerts", headers=admin2).json()["items"]
    strip = lambda items: sorted(
        (i["id"], i["agent_id"], tuple(i["technique_ids"]), i["risk_score"],
         tuple(i["evidence_ids"])) for i in items)
    assert strip(first) == strip(second)
    _report("API contract (8 route groups; 401/403/409; restart+replay "
            "reproduces alerts)")
