"""Field/op/value predicates over events, shared by noise and detection rules.

A predicate is `{"field": "subject.image", "op": "suffix", "value": "x.exe"}`.
Supported ops: equals, prefix, suffix, contains, regex. String comparison is
case-insensitive throughout (Windows paths and image names are not case
stable across sources); regex patterns compile with IGNORECASE. Non-string
event fields (pids, booleans, byte counts) are compared against the string
form of the value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .events import SystemEvent

OPS = ("equals", "prefix", "suffix", "contains", "regex")


class RuleError(ValueError):
    """Raised for unknown fields/ops or bad regex in a rule file."""


_TOP_FIELDS = {
    "id", "agent_id", "category", "action", "object",
    "bytes_in", "bytes_out", "severity_hint",
}
_SUBJECT_FIELDS = {"pid", "ppid", "image", "cmdline", "user", "signed", "elevated"}


def _field_getter(path: str) -> Callable[[SystemEvent], str]:
    if path in _TOP_FIELDS:
        def get_top(e: SystemEvent, _name=path) -> str:
            val = getattr(e, _name)
            return val if isinstance(val, str) else str(val)
        return get_top
    if path.startswith("subject."):
        attr = path[8:]
        if attr not in _SUBJECT_FIELDS:
            raise RuleError(f"unknown subject field {attr!r}")
        def get_subject(e: SystemEvent, _name=attr) -> str:
            val = getattr(e.subject, _name)
            return val if isinstance(val, str) else str(val)
        return get_subject
    raise RuleError(f"unknown event field {path!r}")


@dataclass(frozen=True)
class Predicate:
    field: str
    op: str
    value: str

    def compile(self) -> Callable[[SystemEvent], bool]:
        getter = _field_getter(self.field)
        op = self.op
        if op == "regex":
            try:
                pattern = re.compile(self.value, re.IGNORECASE)
            except re.error as exc:
                raise RuleError(f"bad regex {self.value!r}: {exc}") from exc
            return lambda e: pattern.search(getter(e)) is not None
        needle = self.value.lower()
        if op == "equals":
            return lambda e: getter(e).lower() == needle
        if op == "prefix":
            return lambda e: getter(e).lower().startswith(needle)
        if op == "suffix":
            return lambda e: getter(e).lower().endswith(needle)
        if op == "contains":
            return lambda e: needle in getter(e).lower()
        raise RuleError(f"unknown op {op!r}")


def compile_conjunction(terms: list[dict]) -> Callable[[SystemEvent], bool]:
    """AND together a list of raw predicate dicts; empty list matches all."""
    compiled = [Predicate(t["field"], t["op"], str(t["value"])).compile() for t in terms]
    if not compiled:
        return lambda e: True
    if len(compiled) == 1:
        return compiled[0]

    def match_all(e: SystemEvent, _preds=tuple(compiled)) -> bool:
        for p in _preds:
            if not p(e):
                return False
        return True

    return match_all
