"""Tour of the bundled ATT&CK taxonomy and detection rule set.

The toolkit ships all 14 enterprise tactics plus the techniques referenced
by its bundled signature and correlation rules; a larger taxonomy in the
same JSON schema drops in via `load_taxonomy(path)`.
"""

from edrkit.rules import load_bundled_rules
from edrkit.taxonomy import load_bundled_taxonomy

tax = load_bundled_taxonomy()
print(f"taxonomy {tax.version}: {len(tax.tactics)} tactics, "
      f"{len(tax.techniques)} techniques\n")

print("kill chain order:")
for tactic in sorted(tax.tactics.values(), key=lambda t: t.ordinal):
    print(f"  {tactic.ordinal:2d}. {tactic.id}  {tactic.name}")

print("\nlookups are exact; sub-techniques stay distinct from parents:")
for tid in ("T1003", "T1003.001", "T0000"):
    tech = tax.lookup_technique(tid)
    if tech is None:
        print(f"  {tid:10s} -> not found")
    else:
        tactics = ", ".join(tech.tactic_ids)
        print(f"  {tid:10s} -> {tech.name}  (impact={tech.impact_level.value}, "
              f"tactics={tactics})")

rules = load_bundled_rules(tax)
print(f"\nbundled rules: {len(rules.signatures)} signatures, "
      f"{len(rules.correlations)} correlations")
for rule in rules.signatures[:6]:
    print(f"  [{rule.technique_id:9s}] {rule.name} ({rule.severity.value})")
print("  ...")
for rule in rules.correlations:
    print(f"  [{rule.technique_id:9s}] {rule.name}: {len(rule.steps)} steps "
          f"within {rule.within:.0f}s")
