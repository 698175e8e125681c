"""Full loop: synthesize a labeled incident, run the agent pipeline locally,
respond via policy, then score detection quality against the ground truth.

Writes its working files to a temp directory; everything is seeded and
reproducible.
"""

import json
import tempfile
from pathlib import Path

from edrkit.agentd import Agent, AgentConfig, SourceSpec
from edrkit.alerts import alert_to_dict
from edrkit.forest import save_model
from edrkit.harness import _train_baseline_model, cmd_eval, cmd_synth

work = Path(tempfile.mkdtemp(prefix="edrkit-demo-"))
print(f"working directory: {work}\n")

report = cmd_synth("credential_theft", 1000, 0.05, seed=42, out_dir=work / "corpus")
print(f"synthesized {report['full']['events']} events "
      f"({report['labeled']} technique-labeled), split "
      f"{report['train']['events']}/{report['val']['events']}/{report['test']['events']}")

model_path = work / "model.json"
save_model(_train_baseline_model(seed=7), model_path)
print("trained baseline isolation forest (100 trees, psi=256)")

config = AgentConfig(
    agent_id="agent-01", mode="local",
    source=SourceSpec(type="replay", path=str(work / "corpus" / "full.jsonl")),
    state_dir=str(work / "agent"), model_path=str(model_path),
)
agent = Agent(config)
summary = agent.run()

print("\nagent run summary:")
for key in ("events_read", "kept", "dropped_noise", "dropped_dup",
            "alerts", "actions_executed"):
    print(f"  {key:18s} {getattr(summary, key)}")
print(f"  conservation ok    {summary.conservation_ok()}")

print("\nalerts:")
for alert in agent.pipeline.alerts.values():
    print(f"  {alert.id[:8]}  tier={alert.tier:8s} risk={alert.risk_score:.3f} "
          f"techniques={','.join(alert.technique_ids)}")

print("\nledger effects:")
for bucket, entries in agent.pipeline.actuator.ledger.snapshot().items():
    if entries:
        print(f"  {bucket}: {entries}")

alerts_path = work / "alerts.jsonl"
alerts_path.write_text("\n".join(
    json.dumps(alert_to_dict(a)) for a in agent.pipeline.alerts.values()))
eval_report = cmd_eval(alerts_path, work / "corpus" / "full.jsonl")
print("\ndetection quality vs ground truth:")
for name, value in eval_report.overall.items():
    print(f"  {name:10s} {value:.4f}")
