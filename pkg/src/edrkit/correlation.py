"""Incremental multi-step behavioral correlation over an agent's event stream.

Matching semantics (mirrored by the brute-force oracle in the test suite):
events are considered in arrival order. A rule fires at the moment an event
satisfying its final step arrives such that the earlier steps are satisfied,
in order, by distinct earlier non-consumed events no older than the rule
window relative to the completing event. Among all such bindings the
earliest (lexicographically smallest by arrival position) is chosen, one
detection per completed instance, and the matched events are consumed — they
cannot participate in a second instance of the same rule.
"""

from __future__ import annotations

from collections import deque

from .events import SystemEvent
from .rules import CorrelationRule, Detection, Engine

_MAX_CANDIDATES_PER_RULE = 512


class CorrelationMatcher:
    """Single-writer matcher for one agent stream.

    Per rule it buffers recent events that match any step predicate; when an
    event matches the final step, a depth-first search over the buffer (in
    arrival order) binds the earliest valid prefix.
    """

    def __init__(self, rules: list[CorrelationRule] | tuple[CorrelationRule, ...]):
        self.rules = tuple(rules)
        self._candidates: list[deque[SystemEvent]] = [deque() for _ in self.rules]

    def feed(self, e: SystemEvent) -> list[Detection]:
        detections: list[Detection] = []
        for rule_idx, rule in enumerate(self.rules):
            cands = self._candidates[rule_idx]
            horizon = e.ts_epoch - rule.within
            while cands and cands[0].ts_epoch < horizon:
                cands.popleft()

            preds = rule._preds
            if preds[-1](e):
                prefix = _earliest_prefix(list(cands), preds, e, rule.within)
                if prefix is not None:
                    consumed = {x.id for x in prefix}
                    self._candidates[rule_idx] = deque(
                        x for x in cands if x.id not in consumed)
                    detections.append(Detection(
                        engine=Engine.CORRELATION, score=1.0,
                        technique_ids=(rule.technique_id,),
                        evidence=tuple(x.id for x in prefix) + (e.id,),
                        ts=e.ts, severity=rule.severity,
                    ))
                    continue  # completing event is consumed too

            if any(p(e) for p in preds):
                cands.append(e)
                if len(cands) > _MAX_CANDIDATES_PER_RULE:
                    cands.popleft()
        return detections

    def reset(self) -> None:
        self._candidates = [deque() for _ in self.rules]


def _earliest_prefix(cands: list[SystemEvent], preds, last_event: SystemEvent,
                     within: float) -> list[SystemEvent] | None:
    """Lexicographically earliest binding of steps[:-1] to buffered events."""
    need = len(preds) - 1
    if need == 0:
        return []
    chosen: list[SystemEvent] = []

    def dfs(step: int, start: int) -> bool:
        for i in range(start, len(cands)):
            ev = cands[i]
            if step == 0 and last_event.ts_epoch - ev.ts_epoch > within:
                continue  # too old to anchor a window ending at last_event
            if preds[step](ev):
                chosen.append(ev)
                if step + 1 == need or dfs(step + 1, i + 1):
                    return True
                chosen.pop()
        return False

    return chosen if dfs(0, 0) else None


def match_correlations(events: list[SystemEvent],
                       rules: list[CorrelationRule] | tuple[CorrelationRule, ...]) -> list[Detection]:
    """Batch form: feed a whole window through a fresh matcher."""
    matcher = CorrelationMatcher(rules)
    out: list[Detection] = []
    for e in events:
        out.extend(matcher.feed(e))
    return out
