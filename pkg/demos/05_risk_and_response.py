"""Weighted risk scoring and the simulated response path.

The score is 0.3*anomaly + 0.2*frequency + 0.25*severity + 0.15*asset
+ 0.1*user; tiers at 0.4/0.6/0.8 drive the default response policy against
simulated actuators (an in-memory world ledger, not real mutations).
"""

from datetime import datetime, timezone

from edrkit.alerts import Alert
from edrkit.respond import Actuator, load_default_policy, response_metrics, select_actions
from edrkit.risk import RiskFactors, classify_risk, compute_risk, frequency_score, severity_score
from edrkit.taxonomy import load_bundled_taxonomy

from edrkit.events import ProcessRef, SystemEvent

print("factor helpers:")
print(f"  frequency_score(250 events / threshold 100) = {frequency_score(250, 100)}")
print(f"  severity_score('low' raised by critical impact) = {severity_score('low', 'critical')}")

factors = RiskFactors(anomaly_score=0.8, frequency_score=0.5, severity_score=0.6,
                      asset_criticality=1.0, user_risk=0.2)
score = compute_risk(factors)
print(f"\nworked example: factors {factors.as_dict()}")
print(f"  risk = {score:.2f} -> tier {classify_risk(score)}")

print("\ntier sweep:")
for s in (0.1, 0.39, 0.4, 0.59, 0.6, 0.79, 0.8, 1.0):
    print(f"  {s:4.2f} -> {classify_risk(s)}")

# a critical alert flowing through the default policy
tax = load_bundled_taxonomy()
policy = load_default_policy()
now = datetime.now(timezone.utc)
alert = Alert(id="demo-alert", agent_id="ws-042", created_ts=now,
              tier="critical", technique_ids=("T1003",))
evidence = [
    SystemEvent(id="p1", ts=now, agent_id="ws-042", category="process",
                action="create",
                subject=ProcessRef(pid=7, image="C:\\Temp\\mimikatz.exe",
                                   user="alice", signed=False),
                object="C:\\Temp\\mimikatz.exe"),
    SystemEvent(id="n1", ts=now, agent_id="ws-042", category="network",
                action="connect", subject=ProcessRef(pid=7, user="alice"),
                object="203.0.113.77:4443", bytes_out=2_000_000),
]

actuator = Actuator()
print("\ncritical credential-theft alert under the default policy:")
results = []
for action in select_actions(alert, policy, evidence, tax):
    result = actuator.execute(action)
    results.append(result)
    print(f"  {action.kind.value:22s} target={action.target:18s} "
          f"-> {'ok' if result.success else 'FAILED'} ({result.detail})")

print("\nworld ledger after execution:")
for bucket, entries in actuator.ledger.snapshot().items():
    if entries:
        print(f"  {bucket}: {entries}")

print("\nper-kind metrics:")
for kind, m in response_metrics(results).items():
    print(f"  {kind:22s} success {m['success_rate']:.0%}  "
          f"mean {m['mean_duration_ms']:.3f} ms")
