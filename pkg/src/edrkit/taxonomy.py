"""MITRE ATT&CK tactic/technique taxonomy: loading, validation, and lookup.

The toolkit ships a curated minimal taxonomy (all 14 enterprise tactics plus
the techniques referenced by the bundled detection rules). A full taxonomy in
the same JSON schema can be supplied by the operator and loaded the same way.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

TACTIC_ID_RE = re.compile(r"^TA\d{4}$")
TECHNIQUE_ID_RE = re.compile(r"^T\d{4}(\.\d{3})?$")


class ImpactLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class TaxonomyError(ValueError):
    """Raised when a taxonomy file fails validation; names the offending id."""


@dataclass(frozen=True)
class Tactic:
    id: str
    name: str
    ordinal: int


@dataclass(frozen=True)
class Technique:
    id: str
    name: str
    tactic_ids: tuple[str, ...]
    impact_level: ImpactLevel = ImpactLevel.MEDIUM


@dataclass(frozen=True)
class Taxonomy:
    """Immutable after load; safe to share across pipeline stages."""

    version: str
    tactics: dict[str, Tactic] = field(default_factory=dict)
    techniques: dict[str, Technique] = field(default_factory=dict)

    def lookup_technique(self, technique_id: str) -> Technique | None:
        """Exact-id lookup. Sub-technique ids are not collapsed to parents."""
        return self.techniques.get(technique_id)

    def lookup_tactic(self, tactic_id: str) -> Tactic | None:
        return self.tactics.get(tactic_id)

    def tactics_of(self, technique_id: str) -> tuple[str, ...]:
        tech = self.techniques.get(technique_id)
        return tech.tactic_ids if tech else ()

    def impact_of(self, technique_id: str) -> ImpactLevel | None:
        tech = self.techniques.get(technique_id)
        return tech.impact_level if tech else None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "tactics": [
                {"id": t.id, "name": t.name, "ordinal": t.ordinal}
                for t in self.tactics.values()
            ],
            "techniques": [
                {
                    "id": t.id,
                    "name": t.name,
                    "tactics": list(t.tactic_ids),
                    "impact": t.impact_level.value,
                }
                for t in self.techniques.values()
            ],
        }


def build_taxonomy(doc: dict) -> Taxonomy:
    """Validate a parsed taxonomy document and build the indexed Taxonomy."""
    version = str(doc.get("version", "0"))
    tactics: dict[str, Tactic] = {}
    for raw in doc.get("tactics", []):
        tid = raw["id"]
        if not TACTIC_ID_RE.match(tid):
            raise TaxonomyError(f"malformed tactic id {tid!r}")
        if tid in tactics:
            raise TaxonomyError(f"duplicate tactic id {tid!r}")
        tactics[tid] = Tactic(id=tid, name=raw["name"], ordinal=int(raw["ordinal"]))

    techniques: dict[str, Technique] = {}
    for raw in doc.get("techniques", []):
        tid = raw["id"]
        if not TECHNIQUE_ID_RE.match(tid):
            raise TaxonomyError(f"malformed technique id {tid!r}")
        if tid in techniques:
            raise TaxonomyError(f"duplicate technique id {tid!r}")
        tactic_ids = tuple(raw.get("tactics", []))
        for ref in tactic_ids:
            if ref not in tactics:
                raise TaxonomyError(
                    f"technique {tid!r} references unknown tactic {ref!r}"
                )
        impact = ImpactLevel(raw.get("impact", "medium"))
        techniques[tid] = Technique(
            id=tid, name=raw["name"], tactic_ids=tactic_ids, impact_level=impact
        )

    return Taxonomy(version=version, tactics=tactics, techniques=techniques)


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load and validate a taxonomy JSON file.

    Raises TaxonomyError on duplicate ids or dangling tactic references, and
    json.JSONDecodeError on parse failure.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return build_taxonomy(doc)


def load_bundled_taxonomy() -> Taxonomy:
    """Load the taxonomy shipped with the package."""
    text = resources.files("edrkit.data").joinpath("attck_min.json").read_text("utf-8")
    return build_taxonomy(json.loads(text))


def lookup_technique(tax: Taxonomy, technique_id: str) -> Technique | None:
    return tax.lookup_technique(technique_id)
