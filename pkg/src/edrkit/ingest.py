"""Event collection and preprocessing: sources, noise filtering,
deduplication, and per-agent sliding-window state.

Pipeline conservation contract: for any replay,
``lines read == kept + dropped(noise) + dropped(dup) + skipped(malformed)``.
Late events (older than the window relative to the newest retained event)
still count as kept; they are tallied separately and simply never enter the
ring.

Each WindowStats has a single writer (its agent stream); distinct agents may
be processed concurrently. Sources hand events to the consumer directly (a
synchronous pump), so there are no silent drops between stages; a threaded
deployment must preserve that by blocking producers on a bounded queue.
"""

from __future__ import annotations

import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from .events import EventParseError, SystemEvent, parse_event
from .predicates import Predicate

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    window_seconds: float = 60.0
    max_window_events: int = 10_000
    dedup_horizon: float = 5.0
    replay_rate: float | None = None          # events/second; None = unthrottled
    score_interval: int = 50                  # kept events between anomaly evaluations
    anomaly_threshold: float = 0.6
    frequency_threshold: int = 100            # events per window for the frequency factor
    classifier_enabled: bool = True
    classifier_budget_ms: float = 50.0

    def __post_init__(self):
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be positive")
        if self.max_window_events <= 0:
            raise ValueError("max_window_events must be positive")


@dataclass(frozen=True)
class NoiseRule:
    """One drop predicate; first matching rule in file order wins."""

    name: str
    field: str
    op: str
    value: str

    def compile(self) -> Callable[[SystemEvent], bool]:
        return Predicate(self.field, self.op, self.value).compile()


class NoiseFilter:
    def __init__(self, rules: list[NoiseRule]):
        self.rules = list(rules)
        self._compiled = [(r.name, r.compile()) for r in self.rules]

    def check(self, e: SystemEvent) -> str | None:
        """Return the name of the first matching drop rule, else None."""
        for name, pred in self._compiled:
            if pred(e):
                return name
        return None


def load_noise_rules(source) -> list[NoiseRule]:
    """Load noise rules from a JSON list of {field, op, value, name}."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = source
    return [
        NoiseRule(name=r["name"], field=r["field"], op=r["op"], value=str(r["value"]))
        for r in raw
    ]


def noise_filter(e: SystemEvent, rules: list[NoiseRule]) -> str | None:
    """One-shot form of NoiseFilter.check; returns drop reason or None."""
    return NoiseFilter(rules).check(e)


class WindowStats:
    """Per-agent sliding-window state: the event ring, per-(category, action)
    running counts, and the dedup last-seen map. Single writer per agent."""

    __slots__ = ("agent_id", "window_seconds", "max_events", "ring", "counts",
                 "dedup_seen", "late_dropped", "kept_total", "max_ts")

    def __init__(self, agent_id: str, window_seconds: float = 60.0, max_events: int = 10_000):
        self.agent_id = agent_id
        self.window_seconds = window_seconds
        self.max_events = max_events
        self.ring: deque[SystemEvent] = deque()
        self.counts: dict[tuple[str, str], int] = {}
        self.dedup_seen: dict[tuple, float] = {}
        self.late_dropped = 0
        self.kept_total = 0
        self.max_ts: float | None = None

    def newest_ts(self) -> float | None:
        return self.max_ts

    def recount(self) -> dict[tuple[str, str], int]:
        """Brute-force recount of the ring; oracle for the counts invariant."""
        fresh: dict[tuple[str, str], int] = {}
        for e in self.ring:
            key = (e.category, e.action)
            fresh[key] = fresh.get(key, 0) + 1
        return fresh

    def action_count(self, category: str, action: str) -> int:
        return self.counts.get((category, action), 0)


def dedup(e: SystemEvent, stats: WindowStats, horizon: float = 5.0) -> bool:
    """True if e duplicates an event kept within the horizon.

    The dedup key is (agent, category, action, object, subject.pid) by
    construction: repeats of an identical state change are suppressed
    regardless of their timestamps or ids.
    """
    key = (e.category, e.action, e.object, e.subject.pid)
    seen_ts = stats.dedup_seen.get(key)
    if seen_ts is not None and abs(e.ts_epoch - seen_ts) <= horizon:
        return True
    stats.dedup_seen[key] = e.ts_epoch
    if len(stats.dedup_seen) > 4 * stats.max_events:
        cutoff = e.ts_epoch - horizon
        stats.dedup_seen = {k: t for k, t in stats.dedup_seen.items() if t >= cutoff}
    return False


def update_window(stats: WindowStats, e: SystemEvent) -> bool:
    """Append e to the ring, evicting events older than the window.

    Returns False (and counts the event as late) when e is older than the
    window relative to the newest retained event; such events are never
    reordered into the ring. For slightly out-of-order arrivals inside the
    window, eviction from the arrival-ordered ring is amortized over later
    appends.
    """
    if stats.max_ts is not None and e.ts_epoch < stats.max_ts - stats.window_seconds:
        stats.late_dropped += 1
        return False

    stats.ring.append(e)
    key = (e.category, e.action)
    stats.counts[key] = stats.counts.get(key, 0) + 1
    stats.kept_total += 1
    if stats.max_ts is None or e.ts_epoch > stats.max_ts:
        stats.max_ts = e.ts_epoch

    horizon = stats.max_ts - stats.window_seconds
    while stats.ring and (stats.ring[0].ts_epoch < horizon or len(stats.ring) > stats.max_events):
        old = stats.ring.popleft()
        okey = (old.category, old.action)
        remaining = stats.counts[okey] - 1
        if remaining:
            stats.counts[okey] = remaining
        else:
            del stats.counts[okey]
    return True


@dataclass
class ReplayCounters:
    emitted: int = 0
    skipped_malformed: int = 0
    lines_read: int = 0


class ReplaySource:
    """Replays a JSONL event file in order, optionally throttled.

    Malformed lines are skipped and counted (skip-and-count policy); totals
    are available on .counters after iteration completes.
    """

    def __init__(self, path: str | Path, rate: float | None = None,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.path = Path(path)
        self.rate = rate
        self.counters = ReplayCounters()
        self._clock = clock
        self._sleep = sleep

    def __iter__(self) -> Iterator[SystemEvent]:
        interval = 1.0 / self.rate if self.rate else 0.0
        next_emit = self._clock()
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                self.counters.lines_read += 1
                try:
                    event = parse_event(line)
                except EventParseError as exc:
                    self.counters.skipped_malformed += 1
                    logger.debug("skipping malformed line: %s", exc)
                    continue
                if interval:
                    now = self._clock()
                    if now < next_emit:
                        self._sleep(next_emit - now)
                    next_emit += interval
                self.counters.emitted += 1
                yield event


def replay_source(path: str | Path, rate: float | None = None) -> ReplaySource:
    return ReplaySource(path, rate=rate)
