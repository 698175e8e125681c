"""Pluggable window-level behavior classifier seam with a rule-based stub.

Any object with ``classify(stats) -> list[Detection]`` can sit behind the
seam. Implementations must be pure functions of the window and keep within
the 50 ms latency budget; the pipeline guard treats exceptions and budget
overruns as degraded mode (empty output, pipeline continues) — a classifier
failure never aborts event processing.

The bundled stub maps three window patterns to detections:

    pattern                                          technique  score
    >= 20 failed logons and >= 1 success             T1110      0.9
    >= 5 connects to one rare-port dst, regular gaps T1071      0.8
    account created and privilege changed            T1136      0.7
"""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Protocol

from .features import COMMON_PORTS, _pstd, _split_host_port
from .ingest import WindowStats
from .rules import Detection, Engine, Severity

logger = logging.getLogger(__name__)

FAILED_LOGON_THRESHOLD = 20
BEACON_MIN_CONNECTS = 5
BEACON_REGULARITY_MIN = 0.9

LATENCY_BUDGET_MS = 50.0


class BehaviorClassifier(Protocol):
    def classify(self, stats: WindowStats) -> list[Detection]: ...


class RuleBasedClassifier:
    """Deterministic stand-in behind the classifier seam."""

    def classify(self, stats: WindowStats) -> list[Detection]:
        if not stats.ring:
            return []
        detections: list[Detection] = []
        last_ts = stats.ring[-1].ts

        failed = [e for e in stats.ring if e.category == "user" and e.action == "logon_failed"]
        if len(failed) >= FAILED_LOGON_THRESHOLD:
            successes = [e for e in stats.ring if e.category == "user" and e.action == "logon"]
            if successes:
                evidence = tuple(e.id for e in failed) + (successes[-1].id,)
                detections.append(Detection(
                    engine=Engine.CLASSIFIER, score=0.9,
                    technique_ids=("T1110",), evidence=evidence,
                    ts=last_ts, severity=Severity.HIGH,
                ))

        by_dst: dict[str, list] = defaultdict(list)
        for e in stats.ring:
            if e.category == "network" and e.action == "connect":
                by_dst[e.object].append(e)
        for dst, conns in sorted(by_dst.items()):
            if len(conns) < BEACON_MIN_CONNECTS:
                continue
            _, port = _split_host_port(dst)
            if not port or port in COMMON_PORTS:
                continue
            times = sorted(e.ts_epoch for e in conns)
            gaps = [b - a for a, b in zip(times, times[1:])]
            mean_gap = sum(gaps) / len(gaps)
            if mean_gap <= 0:
                continue
            regularity = 1.0 - _pstd(gaps) / mean_gap
            if regularity >= BEACON_REGULARITY_MIN:
                detections.append(Detection(
                    engine=Engine.CLASSIFIER, score=0.8,
                    technique_ids=("T1071",),
                    evidence=tuple(e.id for e in conns),
                    ts=last_ts, severity=Severity.MEDIUM,
                ))

        created = [e for e in stats.ring if e.category == "user" and e.action == "user_create"]
        priv = [e for e in stats.ring if e.category == "user" and e.action == "priv_change"]
        if created and priv:
            detections.append(Detection(
                engine=Engine.CLASSIFIER, score=0.7,
                technique_ids=("T1136",),
                evidence=tuple(e.id for e in created + priv),
                ts=last_ts, severity=Severity.MEDIUM,
            ))
        return detections


@dataclass
class GuardedClassifier:
    """Wraps any BehaviorClassifier with the failure/budget contract."""

    inner: BehaviorClassifier
    budget_ms: float = LATENCY_BUDGET_MS
    degraded: bool = False
    overruns: int = 0

    def classify(self, stats: WindowStats) -> list[Detection]:
        started = time.perf_counter()
        try:
            result = self.inner.classify(stats)
        except Exception:
            logger.exception("behavior classifier failed; degrading to empty output")
            self.degraded = True
            return []
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if elapsed_ms > self.budget_ms:
            self.overruns += 1
            logger.warning("behavior classifier exceeded %.0f ms budget (%.1f ms)",
                           self.budget_ms, elapsed_ms)
        return result


def classify_behavior(stats: WindowStats,
                      classifier: BehaviorClassifier | None = None) -> list[Detection]:
    """Convenience entry point using the bundled stub by default."""
    return (classifier or RuleBasedClassifier()).classify(stats)


def vector_tags(values) -> list[str]:
    """Technique hints from a bare feature vector, mirroring the stub's
    window rules; used by the prediction API where no event window exists."""
    from .features import FEATURE_INDEX
    tags = []
    if values[FEATURE_INDEX["failed_logon_count"]] >= 0.2 and \
            values[FEATURE_INDEX["logon_count"]] > 0:
        tags.append("T1110")
    if values[FEATURE_INDEX["net_beacon_regularity"]] >= BEACON_REGULARITY_MIN and \
            values[FEATURE_INDEX["net_rare_port_count"]] > 0:
        tags.append("T1071")
    if values[FEATURE_INDEX["file_high_entropy_writes"]] > 0:
        tags.append("T1486")
    if values[FEATURE_INDEX["users_created"]] > 0 and \
            values[FEATURE_INDEX["priv_change_count"]] > 0:
        tags.append("T1136")
    return tags
