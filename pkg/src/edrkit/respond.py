"""Automated response orchestration against simulated actuators.

Actions apply to an in-memory world-state ledger (blocked IPs, isolated
assets, disabled users, firewall rules, quarantined files) rather than real
OS or network mutations; production actuators are deployment adapters behind
the same interface. Execution is idempotent: re-applying an already-applied
effect succeeds as a no-op.

Default policy (data/policy_default.json): critical alerts isolate the asset
and disable the involved user; high alerts block the contacted IP and
quarantine the dropped file; medium alerts queue a firewall rule update for
analyst approval; low alerts are log-only.
"""

from __future__ import annotations

import json
import logging
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable

from .events import SystemEvent
from .features import is_external_host, _split_host_port
from .taxonomy import Taxonomy

logger = logging.getLogger(__name__)

_ACTION_NS = uuid.UUID("7d2c9a96-6a3f-4bb0-9b62-51a4e35d0a11")

APPROVAL_EXPIRY_HOURS = 24.0


class ActionKind(str, Enum):
    BLOCK_IP = "block_ip"
    ISOLATE_ASSET = "isolate_asset"
    DISABLE_USER = "disable_user"
    FIREWALL_RULE_UPDATE = "firewall_rule_update"
    QUARANTINE_FILE = "quarantine_file"


class ActionStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


class PolicyMode(str, Enum):
    AUTOMATIC = "automatic"
    APPROVAL_REQUIRED = "approval_required"


@dataclass
class ResponseAction:
    id: str
    kind: ActionKind
    target: str
    alert_id: str
    requested_ts: datetime
    status: ActionStatus = ActionStatus.PENDING
    mode: PolicyMode = PolicyMode.AUTOMATIC


@dataclass(frozen=True)
class ActionResult:
    action_id: str
    kind: ActionKind
    success: bool
    duration_ms: float
    detail: str = ""

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ValueError("duration must be non-negative")


@dataclass(frozen=True)
class PolicyRule:
    tier: str
    match: str                      # technique id, tactic id, or "*"
    actions: tuple[ActionKind, ...]
    mode: PolicyMode = PolicyMode.AUTOMATIC

    def specificity(self) -> int:
        if self.match == "*":
            return 0
        return 1 if self.match.startswith("TA") else 2


@dataclass(frozen=True)
class ResponsePolicy:
    rules: tuple[PolicyRule, ...]

    def rules_for_tier(self, tier: str) -> tuple[PolicyRule, ...]:
        return tuple(r for r in self.rules if r.tier == tier)


def load_policy(source, taxonomy: Taxonomy | None = None) -> ResponsePolicy:
    """Load a policy from a file path or a parsed JSON document.

    Every tier must have at least one rule; when a taxonomy is supplied,
    every technique/tactic referenced by a rule match must resolve in it.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = source
    rules = tuple(
        PolicyRule(
            tier=r["tier"], match=r.get("match", "*"),
            actions=tuple(ActionKind(a) for a in r["actions"]),
            mode=PolicyMode(r.get("mode", "automatic")),
        )
        for r in raw["rules"]
    )
    tiers_covered = {r.tier for r in rules}
    missing = {"low", "medium", "high", "critical"} - tiers_covered
    if missing:
        raise ValueError(f"policy must cover every tier; missing {sorted(missing)}")
    if taxonomy is not None:
        for rule in rules:
            if rule.match == "*":
                continue
            resolved = (taxonomy.lookup_tactic(rule.match)
                        if rule.match.startswith("TA")
                        else taxonomy.lookup_technique(rule.match))
            if resolved is None:
                raise ValueError(
                    f"policy rule for tier {rule.tier!r} references unknown "
                    f"id {rule.match!r}")
    return ResponsePolicy(rules=rules)


def load_default_policy() -> ResponsePolicy:
    text = resources.files("edrkit.data").joinpath("policy_default.json").read_text("utf-8")
    return load_policy(json.loads(text))


_COMMON_PORTS = frozenset({
    "80", "443", "53", "22", "25", "110", "143", "445", "3389",
    "8080", "8443", "123", "389", "636", "21", "993", "995",
})
_SUSPICIOUS_FILE_MARKERS = (".dmp", ".locked", ".enc", ".crypted", "\\temp\\", "/tmp/")


def derive_target(kind: ActionKind, agent_id: str,
                  evidence: list[SystemEvent]) -> str | None:
    """Pick an action target from alert context; None when underivable.

    Targeting prefers the evidence that looks involved in the attack (rare
    ports, dump/encrypted/temp paths, unsigned images) over incidental
    benign activity swept up by window-level detections.
    """
    if kind == ActionKind.ISOLATE_ASSET:
        return agent_id

    if kind in (ActionKind.BLOCK_IP, ActionKind.FIREWALL_RULE_UPDATE):
        fallback = None
        for e in evidence:
            if e.category != "network":
                continue
            host, port = _split_host_port(e.object)
            if not is_external_host(host):
                continue
            if port and port not in _COMMON_PORTS:
                return host if kind == ActionKind.BLOCK_IP else f"deny {host}"
            fallback = fallback or host
        if fallback is None:
            return None
        return fallback if kind == ActionKind.BLOCK_IP else f"deny {fallback}"

    if kind == ActionKind.DISABLE_USER:
        for e in evidence:
            user = e.subject.user
            if user and user.lower() not in ("system", "root", ""):
                return user
        return None

    if kind == ActionKind.QUARANTINE_FILE:
        fallback = None
        for e in evidence:
            if e.category == "file" and e.object:
                obj_l = e.object.lower()
                if any(m in obj_l for m in _SUSPICIOUS_FILE_MARKERS):
                    return e.object
                fallback = fallback or e.object
        for e in evidence:
            if e.category == "process" and e.subject.image and not e.subject.signed:
                image_l = e.subject.image.lower()
                if any(m in image_l for m in _SUSPICIOUS_FILE_MARKERS):
                    return e.subject.image
        return fallback
    return None


def action_id_for(alert_id: str, kind: ActionKind, target: str) -> str:
    """Deterministic action id so log replay reproduces the same records."""
    return str(uuid.uuid5(_ACTION_NS, f"{alert_id}|{kind.value}|{target}"))


def select_actions(alert, policy: ResponsePolicy,
                   evidence: list[SystemEvent],
                   taxonomy: Taxonomy | None = None,
                   now: datetime | None = None) -> list[ResponseAction]:
    """Map an alert to concrete actions via the policy.

    All matching rules for the alert's tier contribute actions (deduplicated
    by kind and target); the most specific match — technique over tactic over
    wildcard — decides whether each action runs automatically or waits for
    approval.
    """
    now = now or datetime.now(timezone.utc)
    technique_ids = set(alert.technique_ids)
    tactic_ids: set[str] = set()
    if taxonomy is not None:
        for tid in technique_ids:
            tactic_ids.update(taxonomy.tactics_of(tid))

    matched: list[PolicyRule] = []
    for rule in policy.rules_for_tier(alert.tier):
        if rule.match == "*" or rule.match in technique_ids or rule.match in tactic_ids:
            matched.append(rule)
    if not matched:
        logger.info("no response rule matches alert %s (tier=%s); policy gap",
                    alert.id, alert.tier)
        return []

    best = max(matched, key=lambda r: r.specificity())
    mode = best.mode

    actions: list[ResponseAction] = []
    seen: set[tuple[ActionKind, str]] = set()
    for rule in matched:
        for kind in rule.actions:
            target = derive_target(kind, alert.agent_id, evidence)
            if target is None:
                logger.info("alert %s: no target derivable for %s; skipping",
                            alert.id, kind.value)
                continue
            key = (kind, target)
            if key in seen:
                continue
            seen.add(key)
            actions.append(ResponseAction(
                id=action_id_for(alert.id, kind, target),
                kind=kind, target=target, alert_id=alert.id,
                requested_ts=now, mode=mode,
            ))
    return actions


@dataclass
class WorldLedger:
    """Simulated world state mutated by succeeded actions."""

    blocked_ips: set[str] = field(default_factory=set)
    isolated_assets: set[str] = field(default_factory=set)
    disabled_users: set[str] = field(default_factory=set)
    firewall_rules: set[str] = field(default_factory=set)
    quarantined_files: set[str] = field(default_factory=set)

    _SETS = {
        ActionKind.BLOCK_IP: "blocked_ips",
        ActionKind.ISOLATE_ASSET: "isolated_assets",
        ActionKind.DISABLE_USER: "disabled_users",
        ActionKind.FIREWALL_RULE_UPDATE: "firewall_rules",
        ActionKind.QUARANTINE_FILE: "quarantined_files",
    }

    def apply(self, kind: ActionKind, target: str) -> bool:
        """Apply an effect; False when it was already in place (no-op)."""
        bucket: set[str] = getattr(self, self._SETS[kind])
        if target in bucket:
            return False
        bucket.add(target)
        return True

    def snapshot(self) -> dict[str, list[str]]:
        return {name: sorted(getattr(self, name)) for name in self._SETS.values()}

    @classmethod
    def from_snapshot(cls, doc: dict) -> "WorldLedger":
        ledger = cls()
        for name in cls._SETS.values():
            getattr(ledger, name).update(doc.get(name, ()))
        return ledger


class Actuator:
    """Executes approved actions against the ledger, with optional fault
    injection for testing. Mutations are serialized by the single caller."""

    def __init__(self, ledger: WorldLedger | None = None, failure_rate: float = 0.0,
                 rng=None, audit_path: str | Path | None = None):
        self.ledger = ledger if ledger is not None else WorldLedger()
        self.failure_rate = failure_rate
        self._rng = rng
        self.audit_path = Path(audit_path) if audit_path else None

    def execute(self, action: ResponseAction) -> ActionResult:
        started = time.perf_counter()
        action.status = ActionStatus.RUNNING
        if self.failure_rate > 0.0:
            import random as _random
            roll = (self._rng or _random).random()
            if roll < self.failure_rate:
                action.status = ActionStatus.FAILED
                result = ActionResult(
                    action_id=action.id, kind=action.kind, success=False,
                    duration_ms=(time.perf_counter() - started) * 1000.0,
                    detail="injected actuator fault",
                )
                self._audit(action, result)
                return result
        changed = self.ledger.apply(action.kind, action.target)
        action.status = ActionStatus.SUCCEEDED
        result = ActionResult(
            action_id=action.id, kind=action.kind, success=True,
            duration_ms=(time.perf_counter() - started) * 1000.0,
            detail="applied" if changed else "already in effect (no-op)",
        )
        self._audit(action, result)
        return result

    def _audit(self, action: ResponseAction, result: ActionResult) -> None:
        if self.audit_path is None:
            return
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "action": {"id": action.id, "kind": action.kind.value,
                       "target": action.target, "alert_id": action.alert_id},
            "result": {"success": result.success,
                       "duration_ms": result.duration_ms, "detail": result.detail},
        }
        with open(self.audit_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")


def execute(action: ResponseAction, actuator: Actuator) -> ActionResult:
    return actuator.execute(action)


def prune_expired(pending: list[ResponseAction],
                  now: datetime | None = None,
                  expiry_hours: float = APPROVAL_EXPIRY_HOURS) -> list[ResponseAction]:
    """Drop approval-required actions left unapproved past the expiry."""
    now = now or datetime.now(timezone.utc)
    horizon = timedelta(hours=expiry_hours)
    kept = [a for a in pending if now - a.requested_ts <= horizon]
    expired = len(pending) - len(kept)
    if expired:
        logger.info("expired %d unapproved pending action(s)", expired)
    return kept


def response_metrics(results: list[ActionResult]) -> dict[str, dict[str, float]]:
    """Per-kind success rate and mean duration over succeeded actions."""
    by_kind: dict[str, list[ActionResult]] = {}
    for r in results:
        by_kind.setdefault(r.kind.value, []).append(r)
    report: dict[str, dict[str, float]] = {}
    for kind, rs in sorted(by_kind.items()):
        succeeded = [r for r in rs if r.success]
        report[kind] = {
            "total": float(len(rs)),
            "success_rate": len(succeeded) / len(rs),
            "mean_duration_ms": (
                sum(r.duration_ms for r in succeeded) / len(succeeded)
                if succeeded else 0.0
            ),
        }
    return report
