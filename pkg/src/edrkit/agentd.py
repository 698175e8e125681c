"""Endpoint agent runtime.

Local mode runs the full pipeline on-agent (detection, risk, policy response
against a local simulated actuator) and uploads resulting alerts; forward
mode ships raw event batches and lets the server-side pipeline do the work.
Either way the agent heartbeats on schedule, signs every upload, spools to
disk while the server is unreachable (bounded, oldest-dropped), and persists
its envelope sequence across restarts so seq stays strictly increasing for
the agent's lifetime.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .alerts import alert_to_dict
from .events import SystemEvent, event_from_dict, event_to_dict
from .ingest import PipelineConfig, ReplaySource, load_noise_rules
from .pipeline import LocalPipeline
from .protocol import AgentCredentials, sign_json_envelope
from .respond import Actuator, load_default_policy, load_policy
from .risk import DEFAULT_WEIGHTS, RiskWeights
from .rules import load_bundled_rules, load_rules
from .synth import synth_source
from .taxonomy import load_bundled_taxonomy, load_taxonomy

logger = logging.getLogger(__name__)

BACKOFF_CAP_SECONDS = 60.0


@dataclass
class SourceSpec:
    type: str                       # "replay" | "synth"
    path: str = ""
    rate: float | None = None
    scenario: str = "baseline"
    n: int = 1000
    frac: float = 0.0
    seed: int = 0

    @classmethod
    def parse(cls, text: str) -> "SourceSpec":
        """Parse compact CLI form: replay:PATH[:RATE] or
        synth:SCENARIO:N:FRAC:SEED."""
        parts = text.split(":")
        if parts[0] == "replay":
            if len(parts) < 2:
                raise ValueError("replay source needs a path")
            rate = float(parts[2]) if len(parts) > 2 and parts[2] else None
            return cls(type="replay", path=parts[1], rate=rate)
        if parts[0] == "synth":
            if len(parts) != 5:
                raise ValueError("synth source format: synth:SCENARIO:N:FRAC:SEED")
            return cls(type="synth", scenario=parts[1], n=int(parts[2]),
                       frac=float(parts[3]), seed=int(parts[4]))
        raise ValueError(f"unknown source type {parts[0]!r}")


@dataclass
class AgentConfig:
    agent_id: str = "agent-01"
    server_url: str | None = None
    mode: str = "local"                     # "local" | "forward"
    source: SourceSpec = field(default_factory=lambda: SourceSpec(type="synth"))
    enrollment_token: str | None = None
    shared_secret_hex: str | None = None
    state_dir: str = "./edrkit-agent"
    batch_max: int = 200
    batch_flush: float = 1.0
    heartbeat: float = 30.0
    spool_cap: int = 10_000
    max_send_attempts: int = 5
    taxonomy_path: str | None = None
    rules_path: str | None = None
    noise_rules_path: str | None = None
    policy_path: str | None = None
    model_path: str | None = None
    window_seconds: float = 60.0
    dedup_horizon: float = 5.0
    score_interval: int = 50
    anomaly_threshold: float = 0.6
    weights: dict | None = None

    def __post_init__(self):
        if self.batch_max < 1:
            raise ValueError("batch_max must be >= 1")
        if self.mode not in ("local", "forward"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.weights is not None:
            RiskWeights(**self.weights)  # weight-sum invariant, at startup

    @classmethod
    def from_file(cls, path: str | Path) -> "AgentConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(doc.get("source"), dict):
            doc["source"] = SourceSpec(**doc["source"])
        elif isinstance(doc.get("source"), str):
            doc["source"] = SourceSpec.parse(doc["source"])
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown agent config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class AgentSummary:
    events_read: int = 0
    skipped_malformed: int = 0
    kept: int = 0
    dropped_noise: int = 0
    dropped_dup: int = 0
    late: int = 0
    alerts: int = 0
    actions_executed: int = 0
    envelopes_sent: int = 0
    envelopes_accepted: int = 0
    envelopes_failed: int = 0
    rejection_reasons: dict = field(default_factory=dict)
    events_delivered: int = 0
    spooled: int = 0
    spool_drained: int = 0
    spool_overflow_dropped: int = 0
    spool_remaining: int = 0
    heartbeats_sent: int = 0

    def conservation_ok(self) -> bool:
        return (self.events_read ==
                self.kept + self.dropped_noise + self.dropped_dup
                + self.skipped_malformed)

    def as_dict(self) -> dict:
        return dict(vars(self))


class HttpTransport:
    """Thin POST wrapper; swapped out by tests for deterministic fakes."""

    def __init__(self, server_url: str, timeout: float = 10.0):
        self.server_url = server_url.rstrip("/")
        self.timeout = timeout

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        try:
            resp = httpx.post(self.server_url + path, json=payload,
                              timeout=self.timeout)
        except httpx.HTTPError as exc:
            return 0, {"detail": f"transport error: {exc}"}
        try:
            doc = resp.json()
        except ValueError:
            doc = {}
        return resp.status_code, doc


class _AgentState:
    """Persisted sequence counter and the disk spool."""

    def __init__(self, state_dir: str | Path, spool_cap: int):
        self.dir = Path(state_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._state_path = self.dir / "state.json"
        self.spool_path = self.dir / "spool.jsonl"
        self.spool_cap = spool_cap
        self.last_seq = 0
        self.secret_hex: str | None = None
        if self._state_path.exists():
            doc = json.loads(self._state_path.read_text(encoding="utf-8"))
            self.last_seq = int(doc.get("last_seq", 0))
            self.secret_hex = doc.get("secret_hex")

    def next_seq(self) -> int:
        self.last_seq += 1
        self.save()
        return self.last_seq

    def save(self) -> None:
        self._state_path.write_text(json.dumps(
            {"last_seq": self.last_seq, "secret_hex": self.secret_hex}),
            encoding="utf-8")

    def spool_append(self, docs: list[dict]) -> int:
        """Append event docs to the spool; returns how many were dropped to
        respect the cap (oldest dropped first)."""
        existing = self.spool_read()
        merged = existing + docs
        dropped = max(0, len(merged) - self.spool_cap)
        if dropped:
            merged = merged[dropped:]
        self._spool_write(merged)
        return dropped

    def spool_read(self) -> list[dict]:
        if not self.spool_path.exists():
            return []
        docs = []
        with open(self.spool_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    docs.append(json.loads(line))
        return docs

    def _spool_write(self, docs: list[dict]) -> None:
        tmp = self.spool_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for doc in docs:
                fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
        tmp.replace(self.spool_path)


class Agent:
    def __init__(self, config: AgentConfig, transport=None,
                 clock=time.monotonic, sleep=time.sleep):
        self.config = config
        self.clock = clock
        self.sleep = sleep
        self.state = _AgentState(config.state_dir, config.spool_cap)
        self.summary = AgentSummary()
        self.transport = transport
        if self.transport is None and config.server_url:
            self.transport = HttpTransport(config.server_url)
        self.creds: AgentCredentials | None = None
        self.pipeline: LocalPipeline | None = None
        if config.mode == "local":
            self.pipeline = self._build_pipeline()

    # -- wiring --------------------------------------------------------------

    def _build_pipeline(self) -> LocalPipeline:
        cfg = self.config
        taxonomy = load_taxonomy(cfg.taxonomy_path) if cfg.taxonomy_path else load_bundled_taxonomy()
        ruleset = load_rules(cfg.rules_path, taxonomy) if cfg.rules_path else load_bundled_rules(taxonomy)
        if cfg.noise_rules_path:
            noise = load_noise_rules(cfg.noise_rules_path)
        else:
            from importlib import resources
            noise = load_noise_rules(json.loads(
                resources.files("edrkit.data").joinpath("noise_rules.json").read_text("utf-8")))
        policy = (load_policy(cfg.policy_path, taxonomy) if cfg.policy_path
                  else load_default_policy())
        model = None
        if cfg.model_path:
            from .forest import load_model
            model = load_model(cfg.model_path)
        pcfg = PipelineConfig(
            window_seconds=cfg.window_seconds, dedup_horizon=cfg.dedup_horizon,
            score_interval=cfg.score_interval, anomaly_threshold=cfg.anomaly_threshold,
        )
        actuator = Actuator(audit_path=Path(cfg.state_dir) / "actions.jsonl")
        weights = RiskWeights(**cfg.weights) if cfg.weights else DEFAULT_WEIGHTS
        return LocalPipeline(taxonomy, ruleset, config=pcfg, noise_rules=noise,
                             model=model, policy=policy, actuator=actuator,
                             weights=weights)

    def _ensure_credentials(self) -> None:
        if self.transport is None:
            return  # standalone run: nothing to sign
        secret_hex = self.config.shared_secret_hex or self.state.secret_hex
        if secret_hex:
            self.creds = AgentCredentials(agent_id=self.config.agent_id,
                                          shared_secret=bytes.fromhex(secret_hex))
            return
        if not self.config.enrollment_token:
            raise RuntimeError(
                "no shared secret available and no enrollment token configured")
        status, doc = self.transport.post("/api/v1/agents/enroll", {
            "agent_id": self.config.agent_id,
            "enrollment_token": self.config.enrollment_token,
        })
        if status != 201:
            raise RuntimeError(f"enrollment rejected ({status}): {doc.get('detail')}")
        self.state.secret_hex = doc["shared_secret"]
        self.state.save()
        self.creds = AgentCredentials(agent_id=self.config.agent_id,
                                      shared_secret=bytes.fromhex(doc["shared_secret"]))

    # -- upload path -----------------------------------------------------------

    def _send_envelope(self, payload: dict) -> tuple[bool, str]:
        """Sign and send with bounded exponential backoff."""
        assert self.creds is not None
        backoff = 1.0
        reason = ""
        for attempt in range(self.config.max_send_attempts):
            envelope = sign_json_envelope(payload, self.creds, self.state.next_seq())
            status, doc = self.transport.post("/api/v1/events", envelope.to_dict())
            self.summary.envelopes_sent += 1
            if status == 200:
                self.summary.envelopes_accepted += 1
                return True, ""
            reason = str(doc.get("detail", f"http {status}"))
            self.summary.rejection_reasons[reason] = (
                self.summary.rejection_reasons.get(reason, 0) + 1)
            if 400 <= status < 500 and status != 0:
                break  # rejected outright; retrying the same content won't help
            self.sleep(min(backoff, BACKOFF_CAP_SECONDS))
            backoff = min(backoff * 2, BACKOFF_CAP_SECONDS)
        self.summary.envelopes_failed += 1
        return False, reason

    def _flush_events(self, batch: list[dict]) -> None:
        if not batch or self.transport is None:
            return
        ok, _ = self._send_envelope({"kind": "events", "items": batch})
        if ok:
            self.summary.events_delivered += len(batch)
            self._drain_spool()
        else:
            dropped = self.state.spool_append(batch)
            self.summary.spooled += len(batch) - dropped
            self.summary.spool_overflow_dropped += dropped

    def _drain_spool(self) -> None:
        docs = self.state.spool_read()
        if not docs:
            return
        sent = 0
        while sent < len(docs):
            chunk = docs[sent:sent + self.config.batch_max]
            ok, _ = self._send_envelope({"kind": "events", "items": chunk})
            if not ok:
                break
            sent += len(chunk)
            self.summary.events_delivered += len(chunk)
            self.summary.spool_drained += len(chunk)
        self.state._spool_write(docs[sent:])

    def _upload_alerts(self, alerts: list[dict]) -> None:
        if not alerts or self.transport is None:
            return
        self._send_envelope({"kind": "alerts", "items": alerts})

    def _heartbeat(self) -> None:
        if self.transport is None or self.creds is None:
            return
        ok, _ = self._send_envelope({"kind": "heartbeat",
                                     "status": self.summary.as_dict()})
        if ok:
            self.summary.heartbeats_sent += 1

    # -- main pump ---------------------------------------------------------------

    def _source_events(self):
        # events_read counts source lines (malformed included) so that
        # read == kept + dropped(noise) + dropped(dup) + skipped holds.
        spec = self.config.source
        if spec.type == "replay":
            source = ReplaySource(spec.path, rate=spec.rate)
            yield from source
            self.summary.skipped_malformed = source.counters.skipped_malformed
            self.summary.events_read = source.counters.lines_read
        else:
            count = 0
            for e in synth_source(spec.scenario, spec.n, spec.frac, spec.seed,
                                  agent_id=self.config.agent_id):
                count += 1
                yield e
            self.summary.events_read = count

    def run(self) -> AgentSummary:
        self._ensure_credentials()
        batch: list[dict] = []
        touched_alert_ids: set[str] = set()
        last_flush = self.clock()
        last_heartbeat = self.clock()
        read_count = 0

        self._heartbeat()
        for event in self._source_events():
            read_count += 1
            if self.pipeline is not None:
                outcome = self.pipeline.process(event)
                for alert in outcome.alerts:
                    touched_alert_ids.add(alert.id)
            else:
                batch.append(event_to_dict(event))
                if len(batch) >= self.config.batch_max:
                    self._flush_events(batch)
                    batch = []
                    last_flush = self.clock()

            now = self.clock()
            if batch and now - last_flush >= self.config.batch_flush:
                self._flush_events(batch)
                batch = []
                last_flush = now
            if now - last_heartbeat >= self.config.heartbeat:
                self._heartbeat()
                last_heartbeat = now

        if batch:
            self._flush_events(batch)
        if self.summary.events_read == 0:
            self.summary.events_read = read_count
        if self.pipeline is not None:
            self.pipeline.finish()
            counters = self.pipeline.counters
            self.summary.kept = counters.kept
            self.summary.dropped_noise = counters.dropped_noise
            self.summary.dropped_dup = counters.dropped_dup
            self.summary.late = counters.late
            self.summary.alerts = counters.alerts
            self.summary.actions_executed = counters.actions_executed
            if self.transport is not None and touched_alert_ids:
                docs = [alert_to_dict(self.pipeline.alerts[aid])
                        for aid in sorted(touched_alert_ids)
                        if aid in self.pipeline.alerts]
                self._upload_alerts(docs)
        else:
            # forward mode ships raw events; nothing is locally filtered
            self.summary.kept = read_count
        self._heartbeat()
        if self.transport is not None:
            self._drain_spool()
        self.summary.spool_remaining = len(self.state.spool_read())
        return self.summary


def run_agent(config: AgentConfig, transport=None, clock=time.monotonic,
              sleep=time.sleep) -> AgentSummary:
    return Agent(config, transport=transport, clock=clock, sleep=sleep).run()


def flush_batch(events: list[SystemEvent], creds: AgentCredentials, seq: int,
                transport) -> tuple[bool, str]:
    """Sign one batch as a single envelope and post it; seq advances by one
    envelope per call (the caller owns the counter)."""
    payload = {"kind": "events", "items": [event_to_dict(e) for e in events]}
    envelope = sign_json_envelope(payload, creds, seq)
    status, doc = transport.post("/api/v1/events", envelope.to_dict())
    if status == 200:
        return True, ""
    return False, str(doc.get("detail", f"http {status}"))
