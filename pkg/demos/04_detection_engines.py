"""The four detection engines on one credential-theft burst.

Signature matching fires per event; correlation follows the multi-step
chain; the window classifier stub flags behavioral patterns; anomaly
scoring (demo 03) watches the feature vector. Everything lands in one
alert with an ATT&CK-tagged risk picture.
"""

from edrkit.ingest import WindowStats, update_window
from edrkit.classifier import classify_behavior
from edrkit.correlation import CorrelationMatcher
from edrkit.events import ProcessRef, SystemEvent
from edrkit.rules import load_bundled_rules, match_signatures
from edrkit.synth import synth_source
from edrkit.taxonomy import load_bundled_taxonomy

tax = load_bundled_taxonomy()
rules = load_bundled_rules(tax)

# ten attack steps hidden inside two hundred benign events
events = list(synth_source("credential_theft", 200, 0.05, seed=42))

matcher = CorrelationMatcher(rules.correlations)
stats = WindowStats("agent-01", window_seconds=300.0)

print("signature and correlation hits, in stream order:\n")
for e in events:
    update_window(stats, e)
    for det in match_signatures(e, rules.signatures):
        print(f"  {e.ts.strftime('%H:%M:%S')}  signature    "
              f"{det.technique_ids[0]:9s} {tax.lookup_technique(det.technique_ids[0]).name}")
    for det in matcher.feed(e):
        chain = " -> ".join(det.evidence)
        print(f"  {e.ts.strftime('%H:%M:%S')}  correlation  "
              f"{det.technique_ids[0]:9s} chain of {len(det.evidence)} events")

print("\nwindow classifier stub on a brute-force pattern:")
burst = WindowStats("agent-02", window_seconds=300.0)
base = events[0].ts
for i in range(20):
    update_window(burst, SystemEvent(
        id=f"fail-{i}", ts=base, agent_id="agent-02", category="user",
        action="logon_failed", subject=ProcessRef(user="victim"),
        object="VPN-GW.corp"))
update_window(burst, SystemEvent(
    id="success", ts=base, agent_id="agent-02", category="user",
    action="logon", subject=ProcessRef(user="victim"), object="VPN-GW.corp"))
for det in classify_behavior(burst):
    print(f"  classifier   {det.technique_ids[0]:9s} score={det.score} "
          f"({len(det.evidence)} evidence events)")
