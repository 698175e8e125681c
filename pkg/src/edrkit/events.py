"""Canonical endpoint event model, JSONL parsing, and serialization.

One SystemEvent describes one observed endpoint action. Events arrive as
JSONL (one object per line) with RFC 3339 millisecond UTC timestamps:

    {"id", "ts", "agent_id", "category", "action",
     "subject": {"pid", "ppid", "image", "cmdline", "user", "signed", "elevated"},
     "object", "bytes_in", "bytes_out", "severity_hint", "label"}

Unknown extra JSON fields are ignored. The ``label`` field carries optional
ground truth ("benign" or a technique id) and is used only by the evaluation
harness, never by detection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

SEVERITY_LEVELS = ("low", "medium", "high", "critical")

# Documented category/action table. parse_event rejects pairs outside it.
CATEGORY_ACTIONS: dict[str, frozenset[str]] = {
    "process": frozenset({"create", "terminate", "access"}),
    "file": frozenset({"create", "modify", "delete", "rename", "read"}),
    "network": frozenset({"connect", "dns", "listen", "disconnect"}),
    "registry": frozenset({"set_value", "delete_value", "create_key", "delete_key", "read"}),
    "user": frozenset({"logon", "logoff", "logon_failed", "user_create", "user_delete", "priv_change"}),
    "service": frozenset({"install", "start", "stop", "delete"}),
}


class EventParseError(ValueError):
    """Raised when an event line fails validation. Names the offending field."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True, slots=True)
class ProcessRef:
    """The acting process. For process-create events this describes the new
    process (pid/ppid/image/cmdline); the created image path is the object."""

    pid: int = 0
    ppid: int = 0
    image: str = ""
    cmdline: str = ""
    user: str = ""
    signed: bool = True
    elevated: bool = False


@dataclass(frozen=True, slots=True)
class SystemEvent:
    id: str
    ts: datetime
    agent_id: str
    category: str
    action: str
    subject: ProcessRef
    object: str = ""
    bytes_in: int = 0
    bytes_out: int = 0
    severity_hint: str | None = None
    label: str | None = None
    ts_epoch: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.ts_epoch == 0.0:
            object.__setattr__(self, "ts_epoch", self.ts.timestamp())


def parse_timestamp(raw: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    text = raw.replace("Z", "+00:00") if raw.endswith("Z") else raw
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        raise ValueError("timestamp must carry a timezone")
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """RFC 3339 with millisecond precision, UTC, Z suffix."""
    dt = dt.astimezone(timezone.utc)
    return f"{dt.strftime('%Y-%m-%dT%H:%M:%S')}.{dt.microsecond // 1000:03d}Z"


def _require(doc: dict, name: str):
    if name not in doc or doc[name] is None:
        raise EventParseError(name, "missing required field")
    return doc[name]


def event_from_dict(doc: dict) -> SystemEvent:
    """Build a validated SystemEvent from a parsed JSON object."""
    event_id = str(_require(doc, "id"))
    raw_ts = _require(doc, "ts")
    try:
        ts = parse_timestamp(str(raw_ts))
    except ValueError as exc:
        raise EventParseError("ts", f"unparseable timestamp {raw_ts!r} ({exc})") from exc
    agent_id = str(_require(doc, "agent_id"))

    category = str(_require(doc, "category"))
    if category not in CATEGORY_ACTIONS:
        raise EventParseError("category", f"invalid category {category!r}")
    action = str(_require(doc, "action"))
    if action not in CATEGORY_ACTIONS[category]:
        raise EventParseError("action", f"action {action!r} not valid for category {category!r}")

    subj = doc.get("subject") or {}
    if not isinstance(subj, dict):
        raise EventParseError("subject", "must be an object")
    try:
        subject = ProcessRef(
            pid=int(subj.get("pid", 0)),
            ppid=int(subj.get("ppid", 0)),
            image=str(subj.get("image", "")),
            cmdline=str(subj.get("cmdline", "")),
            user=str(subj.get("user", "")),
            signed=bool(subj.get("signed", True)),
            elevated=bool(subj.get("elevated", False)),
        )
    except (TypeError, ValueError) as exc:
        raise EventParseError("subject", str(exc)) from exc

    bytes_in = int(doc.get("bytes_in", 0) or 0)
    bytes_out = int(doc.get("bytes_out", 0) or 0)
    if bytes_in < 0:
        raise EventParseError("bytes_in", "must be non-negative")
    if bytes_out < 0:
        raise EventParseError("bytes_out", "must be non-negative")
    if category != "network" and (bytes_in or bytes_out):
        raise EventParseError("bytes_in", "byte counters only valid for network events")

    severity_hint = doc.get("severity_hint")
    if severity_hint is not None:
        severity_hint = str(severity_hint)
        if severity_hint not in SEVERITY_LEVELS:
            raise EventParseError("severity_hint", f"invalid level {severity_hint!r}")

    label = doc.get("label")
    return SystemEvent(
        id=event_id,
        ts=ts,
        agent_id=agent_id,
        category=category,
        action=action,
        subject=subject,
        object=str(doc.get("object", "")),
        bytes_in=bytes_in,
        bytes_out=bytes_out,
        severity_hint=severity_hint,
        label=str(label) if label is not None else None,
    )


def parse_event(line: str) -> SystemEvent:
    """Parse one JSONL line into a validated SystemEvent."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventParseError("json", f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise EventParseError("json", "event line must be a JSON object")
    return event_from_dict(doc)


def event_to_dict(e: SystemEvent) -> dict:
    doc = {
        "id": e.id,
        "ts": format_timestamp(e.ts),
        "agent_id": e.agent_id,
        "category": e.category,
        "action": e.action,
        "subject": {
            "pid": e.subject.pid,
            "ppid": e.subject.ppid,
            "image": e.subject.image,
            "cmdline": e.subject.cmdline,
            "user": e.subject.user,
            "signed": e.subject.signed,
            "elevated": e.subject.elevated,
        },
        "object": e.object,
        "bytes_in": e.bytes_in,
        "bytes_out": e.bytes_out,
    }
    if e.severity_hint is not None:
        doc["severity_hint"] = e.severity_hint
    if e.label is not None:
        doc["label"] = e.label
    return doc


def event_to_json(e: SystemEvent) -> str:
    """Canonical single-line JSON; byte-stable for identical events."""
    return json.dumps(event_to_dict(e), separators=(",", ":"), sort_keys=False)


@dataclass(frozen=True)
class DatasetSplit:
    """Train/validation/test fractions; must sum to 1 and all be positive."""

    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15

    def __post_init__(self):
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1.0, got {total}")
        if min(self.train_frac, self.val_frac, self.test_frac) <= 0:
            raise ValueError("split fractions must all be positive")
