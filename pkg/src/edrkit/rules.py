"""Detection rule model: signature rules, correlation rules, and the
Detection record emitted by every engine.

Rules file schema (JSON):

    {
      "signatures": [
        {"id", "name", "match": [{"field", "op", "value"}, ...],
         "technique", "severity"}
      ],
      "correlations": [
        {"id", "name", "steps": [[{"field", "op", "value"}, ...], ...],
         "within_sec", "technique", "severity"}
      ]
    }

Each signature match is a conjunction of predicates; each correlation step is
one conjunction, and the steps must be satisfied in order by distinct events
inside the rule's time window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable

from .events import SystemEvent
from .predicates import RuleError, compile_conjunction
from .taxonomy import Taxonomy


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class Engine(str, Enum):
    ANOMALY = "anomaly"
    SIGNATURE = "signature"
    CORRELATION = "correlation"
    CLASSIFIER = "classifier"


@dataclass(frozen=True)
class Detection:
    engine: Engine
    score: float
    technique_ids: tuple[str, ...]
    evidence: tuple[str, ...]
    ts: datetime
    severity: Severity = Severity.MEDIUM

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")
        if not self.evidence:
            raise ValueError("detection evidence must be non-empty")


@dataclass(frozen=True)
class SignatureRule:
    id: str
    name: str
    match: tuple[dict, ...]
    technique_id: str
    severity: Severity
    _pred: Callable[[SystemEvent], bool] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_pred", compile_conjunction(list(self.match)))

    def matches(self, e: SystemEvent) -> bool:
        return self._pred(e)


@dataclass(frozen=True)
class CorrelationRule:
    id: str
    name: str
    steps: tuple[tuple[dict, ...], ...]
    within: float
    technique_id: str
    severity: Severity
    _preds: tuple[Callable[[SystemEvent], bool], ...] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.steps) < 2:
            raise RuleError(f"correlation rule {self.id!r} needs at least 2 steps")
        if self.within <= 0:
            raise RuleError(f"correlation rule {self.id!r} needs a positive window")
        object.__setattr__(
            self, "_preds",
            tuple(compile_conjunction(list(step)) for step in self.steps),
        )


@dataclass(frozen=True)
class RuleSet:
    signatures: tuple[SignatureRule, ...]
    correlations: tuple[CorrelationRule, ...]


def build_ruleset(doc: dict, taxonomy: Taxonomy | None = None) -> RuleSet:
    """Build and validate a RuleSet; technique ids must resolve when a
    taxonomy is supplied."""
    signatures = []
    for raw in doc.get("signatures", []):
        rule = SignatureRule(
            id=raw["id"], name=raw["name"], match=tuple(raw["match"]),
            technique_id=raw["technique"], severity=Severity(raw["severity"]),
        )
        signatures.append(rule)
    correlations = []
    for raw in doc.get("correlations", []):
        rule = CorrelationRule(
            id=raw["id"], name=raw["name"],
            steps=tuple(tuple(step) for step in raw["steps"]),
            within=float(raw["within_sec"]),
            technique_id=raw["technique"], severity=Severity(raw["severity"]),
        )
        correlations.append(rule)
    if taxonomy is not None:
        for rule in (*signatures, *correlations):
            if taxonomy.lookup_technique(rule.technique_id) is None:
                raise RuleError(
                    f"rule {rule.id!r} references unknown technique {rule.technique_id!r}"
                )
    return RuleSet(signatures=tuple(signatures), correlations=tuple(correlations))


def load_rules(path: str | Path, taxonomy: Taxonomy | None = None) -> RuleSet:
    with open(path, "r", encoding="utf-8") as fh:
        return build_ruleset(json.load(fh), taxonomy)


def load_bundled_rules(taxonomy: Taxonomy | None = None) -> RuleSet:
    text = resources.files("edrkit.data").joinpath("rules.json").read_text("utf-8")
    return build_ruleset(json.loads(text), taxonomy)


def match_signatures(e: SystemEvent, rules: list[SignatureRule] | tuple[SignatureRule, ...]) -> list[Detection]:
    """One Detection per matching signature rule; score fixed at 1.0."""
    found = []
    for rule in rules:
        if rule.matches(e):
            found.append(Detection(
                engine=Engine.SIGNATURE, score=1.0,
                technique_ids=(rule.technique_id,), evidence=(e.id,),
                ts=e.ts, severity=rule.severity,
            ))
    return found
