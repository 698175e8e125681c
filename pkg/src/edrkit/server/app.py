"""Central management service: the REST API, server-side detection pipeline,
and recovery-by-replay persistence.

Route groups (JSON bodies; JWT bearer auth except login, enrollment, and the
HMAC-enveloped event channel):

    auth        POST /api/v1/auth/register (admin), POST /api/v1/auth/login
    agents      POST /api/v1/agents/enroll (bootstrap token), GET /api/v1/agents,
                PUT /api/v1/agents/{id}/config (admin)
    assets      GET/PUT /api/v1/assets, GET /api/v1/assets/{id}/status
    events      POST /api/v1/events (HMAC envelope), GET /api/v1/events
    alerts      GET /api/v1/alerts, POST /api/v1/alerts, PATCH /api/v1/alerts/{id}
    risk        POST /api/v1/risk/score, GET /api/v1/risk/assets/{id}
    responses   POST /api/v1/responses, GET /api/v1/responses
    ml          POST /api/v1/ml/predict, GET /api/v1/ml/metrics, GET /api/v1/ml/status

Status codes: 200/201 success, 400 validation, 401 auth, 403 role,
404 missing, 409 illegal transition or duplicate, 503 model unavailable.
Error bodies are {code, message, detail}.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..alerts import Alert, AlertStatus, IllegalTransition, alert_from_dict, alert_to_dict
from ..classifier import vector_tags
from ..events import event_from_dict, event_to_dict, format_timestamp, parse_timestamp, EventParseError
from ..features import FEATURE_COUNT
from ..forest import anomaly_score, load_model
from ..ingest import PipelineConfig, load_noise_rules
from ..pipeline import LocalPipeline, ProcessOutcome
from ..protocol import (
    AgentCredentials, Envelope, VerifyState, enroll_agent, verify_envelope,
    EnrollmentError,
)
from ..respond import (
    ActionKind, ActionStatus, Actuator, PolicyMode, ResponseAction, WorldLedger,
    action_id_for, derive_target, load_default_policy, load_policy, prune_expired,
    response_metrics, select_actions,
)
from ..risk import (
    DEFAULT_WEIGHTS, AssetProfile, ProfileStore, RiskFactors, RiskWeights,
    classify_risk, compute_risk,
)
from ..rules import load_bundled_rules, load_rules
from ..taxonomy import load_bundled_taxonomy, load_taxonomy
from . import authn
from .storage import ServerStore

logger = logging.getLogger(__name__)

API = "/api/v1"

_TIER_RANK = {"low": 0, "medium": 1, "high": 2, "critical": 3}
_STATUS_REASONS = {
    400: "validation error", 401: "authentication required", 403: "forbidden",
    404: "not found", 409: "conflict", 503: "unavailable",
}


@dataclass
class ServerConfig:
    data_dir: str = "./edrkit-server"
    bootstrap_token: str = "enroll-me"
    admin_user: str = "admin"
    admin_password: str = "admin"
    token_ttl_seconds: float = authn.TOKEN_TTL_SECONDS
    weights: dict = dc_field(default_factory=dict)
    taxonomy_path: str | None = None
    rules_path: str | None = None
    noise_rules_path: str | None = None
    policy_path: str | None = None
    model_path: str | None = None
    window_seconds: float = 60.0
    dedup_horizon: float = 5.0
    score_interval: int = 50
    anomaly_threshold: float = 0.6
    skew_seconds: float = 300.0
    heartbeat_interval: float = 30.0
    snapshot_every: int = 50

    @classmethod
    def from_file(cls, path: str | Path) -> "ServerConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown server config keys: {sorted(unknown)}")
        # the bootstrap token may come from the environment instead
        env_token = os.environ.get("EDRKIT_BOOTSTRAP_TOKEN")
        if "bootstrap_token" not in doc and env_token:
            doc["bootstrap_token"] = env_token
        return cls(**doc)


class ServerState:
    """Everything behind the routes; one lock serializes mutation."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.lock = threading.RLock()
        self.store = ServerStore(config.data_dir)
        self.jwt_secret = self.store.jwt_secret()

        # Weight-sum invariant is enforced here, at startup.
        self.weights = RiskWeights(**config.weights) if config.weights else DEFAULT_WEIGHTS

        self.taxonomy = (load_taxonomy(config.taxonomy_path)
                         if config.taxonomy_path else load_bundled_taxonomy())
        self.ruleset = (load_rules(config.rules_path, self.taxonomy)
                        if config.rules_path else load_bundled_rules(self.taxonomy))
        if config.noise_rules_path:
            self.noise_rules = load_noise_rules(config.noise_rules_path)
        else:
            from importlib import resources
            self.noise_rules = load_noise_rules(json.loads(
                resources.files("edrkit.data").joinpath("noise_rules.json").read_text("utf-8")))
        self.policy = (load_policy(config.policy_path, self.taxonomy)
                       if config.policy_path else load_default_policy())
        self.model = load_model(config.model_path) if config.model_path else None

        self.profiles = ProfileStore()
        for asset in self.store.assets.values():
            self._index_asset(asset)

        ledger = WorldLedger.from_snapshot(self.store.ledger_snapshot)
        self.actuator = Actuator(ledger, audit_path=self.store.dir / "actions.jsonl")
        self.pipeline = self._new_pipeline()

        self.verify_states: dict[str, VerifyState] = {}
        self.uploaded_alerts: dict[str, Alert] = {}
        self.manual_alerts: dict[str, Alert] = {}
        self._envelopes_since_snapshot = 0

        self._seed_admin()
        self._replay_log()
        for doc in self.store.manual_alerts:
            alert = alert_from_dict(doc)
            self.manual_alerts[alert.id] = alert
        self._apply_overlays()

    # -- construction helpers ----------------------------------------------

    def _new_pipeline(self) -> LocalPipeline:
        pcfg = PipelineConfig(
            window_seconds=self.config.window_seconds,
            dedup_horizon=self.config.dedup_horizon,
            score_interval=self.config.score_interval,
            anomaly_threshold=self.config.anomaly_threshold,
        )
        return LocalPipeline(
            self.taxonomy, self.ruleset, config=pcfg, noise_rules=self.noise_rules,
            model=self.model, policy=self.policy, actuator=self.actuator,
            weights=self.weights, profiles=self.profiles,
        )

    def _seed_admin(self) -> None:
        if not self.store.users:
            salt, digest = authn.hash_password(self.config.admin_password)
            self.store.users[self.config.admin_user] = {
                "salt": salt, "hash": digest, "role": "admin",
            }
            self.store.save_snapshot()

    def _index_asset(self, asset: dict) -> None:
        profile = AssetProfile(asset_id=asset["asset_id"],
                               criticality=float(asset.get("criticality", 0.5)))
        self.profiles.assets[asset["asset_id"]] = profile
        agent_id = asset.get("agent_id")
        if agent_id:
            self.profiles.assets[agent_id] = profile

    def _replay_log(self) -> None:
        """Rebuild derived state (alerts, ledger effects, sequence floors)
        by replaying the append-only event log through a fresh pipeline."""
        replayed = 0
        for entry in self.store.iter_log():
            agent_id = entry.get("agent_id", "")
            seq = int(entry.get("seq", 0))
            vstate = self._verify_state(agent_id)
            vstate.last_seq = max(vstate.last_seq, seq)
            kind = entry.get("kind")
            if kind == "events":
                outcomes = []
                for doc in entry.get("items", ()):
                    outcomes.append(self.pipeline.process(event_from_dict(doc)))
                self._record_outcomes(outcomes)
            elif kind == "alerts":
                for doc in entry.get("items", ()):
                    alert = alert_from_dict(doc)
                    self.uploaded_alerts[alert.id] = alert
            replayed += 1
        if replayed:
            logger.info("replayed %d envelope(s) from the event log", replayed)

    def _apply_overlays(self) -> None:
        for alert_id, overlay in self.store.alert_overlays.items():
            alert = self.find_alert(alert_id)
            if alert is None:
                continue
            alert.status = AlertStatus(overlay.get("status", alert.status.value))
            alert.assignee = overlay.get("assignee", alert.assignee)
            alert.notes = list(overlay.get("notes", alert.notes))

    # -- shared accessors ----------------------------------------------------

    def _verify_state(self, agent_id: str) -> VerifyState:
        state = self.verify_states.get(agent_id)
        if state is None:
            state = VerifyState(skew_window=self.config.skew_seconds)
            self.verify_states[agent_id] = state
        return state

    def all_alerts(self) -> dict[str, Alert]:
        merged: dict[str, Alert] = {}
        merged.update(self.pipeline.alerts)
        merged.update(self.uploaded_alerts)
        merged.update(self.manual_alerts)
        return merged

    def find_alert(self, alert_id: str) -> Alert | None:
        return (self.pipeline.alerts.get(alert_id)
                or self.uploaded_alerts.get(alert_id)
                or self.manual_alerts.get(alert_id))

    def _record_outcomes(self, outcomes: list[ProcessOutcome]) -> None:
        for outcome in outcomes:
            for action, result in outcome.executed:
                self.store.actions[action.id] = {
                    "action": _action_doc(action),
                    "result": _result_doc(result),
                }
        for action in self.pipeline.pending_actions:
            self.store.pending_actions.setdefault(action.id, _action_doc(action))
        self.pipeline.pending_actions.clear()

    def snapshot(self) -> None:
        self.store.ledger_snapshot = self.actuator.ledger.snapshot()
        self.store.save_snapshot()

    def maybe_snapshot(self) -> None:
        self._envelopes_since_snapshot += 1
        if self._envelopes_since_snapshot >= self.config.snapshot_every:
            self._envelopes_since_snapshot = 0
            self.snapshot()

    def agent_status(self, record: dict, now_ms: int | None = None) -> str:
        last = record.get("last_heartbeat_ms")
        if last is None:
            return "offline"
        now_ms = now_ms if now_ms is not None else int(time.time() * 1000)
        interval = float(record.get("config", {}).get("heartbeat",
                                                      self.config.heartbeat_interval))
        return "online" if now_ms - last <= 3 * interval * 1000 else "offline"


# -- request models ---------------------------------------------------------


class LoginBody(BaseModel):
    user: str
    password: str


class RegisterBody(BaseModel):
    user: str
    password: str
    role: str = "viewer"


class EnrollBody(BaseModel):
    agent_id: str
    enrollment_token: str
    hostname: str = ""


class AgentConfigBody(BaseModel):
    mode: str | None = None
    heartbeat: float | None = None
    batch_max: int | None = None


class AssetBody(BaseModel):
    asset_id: str
    agent_id: str = ""
    criticality: float = Field(0.5, ge=0.0, le=1.0)
    inventory: dict = Field(default_factory=dict)


class EnvelopeBody(BaseModel):
    v: int
    agent_id: str
    seq: int
    ts: int
    nonce: str
    body: str
    mac: str


class AlertCreateBody(BaseModel):
    agent_id: str
    severity: str = "medium"
    technique_ids: list[str] = Field(default_factory=list)
    note: str = ""


class AlertPatchBody(BaseModel):
    status: str | None = None
    assignee: str | None = None
    note: str | None = None


class RiskScoreBody(BaseModel):
    factors: dict
    weights: dict | None = None


class ResponseBody(BaseModel):
    alert_id: str
    mode: str | None = None                  # "policy"
    kinds: list[str] | None = None           # admin-only explicit bypass
    approve: list[str] | None = None         # pending action ids


class PredictBody(BaseModel):
    values: list[float]


def _action_doc(action: ResponseAction) -> dict:
    return {
        "id": action.id, "kind": action.kind.value, "target": action.target,
        "alert_id": action.alert_id, "requested_ts": format_timestamp(action.requested_ts),
        "status": action.status.value, "mode": action.mode.value,
    }


def _result_doc(result) -> dict:
    return {"action_id": result.action_id, "kind": result.kind.value,
            "success": result.success, "duration_ms": result.duration_ms,
            "detail": result.detail}


def _action_from_doc(doc: dict) -> ResponseAction:
    return ResponseAction(
        id=doc["id"], kind=ActionKind(doc["kind"]), target=doc["target"],
        alert_id=doc["alert_id"], requested_ts=parse_timestamp(doc["requested_ts"]),
        status=ActionStatus(doc["status"]), mode=PolicyMode(doc["mode"]),
    )


def create_app(config: ServerConfig | None = None,
               state: ServerState | None = None) -> FastAPI:
    if state is None:
        state = ServerState(config or ServerConfig())

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        with state.lock:
            state.snapshot()

    app = FastAPI(title="edrkit management server", docs_url=None,
                  redoc_url=None, lifespan=lifespan)
    app.state.edr = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(HTTPException)
    async def http_error(_req: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={
            "code": exc.status_code,
            "message": _STATUS_REASONS.get(exc.status_code, "error"),
            "detail": exc.detail,
        })

    @app.exception_handler(RequestValidationError)
    async def validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={
            "code": 400, "message": _STATUS_REASONS[400], "detail": str(exc.errors()),
        })

    # -- auth helpers --------------------------------------------------------

    def current_principal(authorization: str | None = Header(default=None)) -> dict:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, "missing bearer token")
        try:
            return authn.verify_token(state.jwt_secret, authorization[7:])
        except authn.TokenError as exc:
            raise HTTPException(401, str(exc)) from exc

    def require(claims: dict, minimum: str) -> None:
        if authn.role_rank(claims["role"]) < authn.role_rank(minimum):
            raise HTTPException(403, f"requires {minimum} role")

    # -- authentication endpoints -------------------------------------------

    @app.post(API + "/auth/login")
    def login(body: LoginBody):
        with state.lock:
            record = state.store.users.get(body.user)
            # Uniform rejection: no user-existence oracle.
            if record is None or not authn.verify_password(
                    body.password, record["salt"], record["hash"]):
                raise HTTPException(401, "invalid credentials")
            token = authn.mint_token(state.jwt_secret, body.user, record["role"],
                                     ttl_seconds=state.config.token_ttl_seconds)
            return {"token": token, "role": record["role"],
                    "expires_in": state.config.token_ttl_seconds}

    @app.post(API + "/auth/register", status_code=201)
    def register(body: RegisterBody, claims: dict = Depends(current_principal)):
        require(claims, "admin")
        if body.role not in authn.ROLES:
            raise HTTPException(400, f"unknown role {body.role!r}")
        with state.lock:
            if body.user in state.store.users:
                raise HTTPException(409, f"user {body.user!r} already exists")
            salt, digest = authn.hash_password(body.password)
            state.store.users[body.user] = {"salt": salt, "hash": digest, "role": body.role}
            state.store.save_snapshot()
        return {"user": body.user, "role": body.role}

    # -- agent management endpoints -------------------------------------------

    @app.post(API + "/agents/enroll", status_code=201)
    def enroll(body: EnrollBody):
        with state.lock:
            registry: dict[str, AgentCredentials] = {
                aid: AgentCredentials(agent_id=aid,
                                      shared_secret=bytes.fromhex(rec["secret_hex"]))
                for aid, rec in state.store.agents.items()
            }
            try:
                creds = enroll_agent(
                    {"agent_id": body.agent_id, "enrollment_token": body.enrollment_token},
                    state.config.bootstrap_token, registry,
                )
            except EnrollmentError as exc:
                message = str(exc)
                raise HTTPException(409 if "already enrolled" in message else 401,
                                    message) from exc
            state.store.agents[body.agent_id] = {
                "agent_id": body.agent_id,
                "hostname": body.hostname,
                "secret_hex": creds.shared_secret.hex(),
                "enrolled_ts": format_timestamp(datetime.now(timezone.utc)),
                "last_heartbeat_ms": None,
                "config": {"mode": "local", "heartbeat": state.config.heartbeat_interval},
                "config_version": 1,
            }
            state.store.save_snapshot()
            return {"agent_id": body.agent_id,
                    "shared_secret": creds.shared_secret.hex()}

    @app.get(API + "/agents")
    def list_agents(claims: dict = Depends(current_principal),
                    limit: int = 100, offset: int = 0):
        with state.lock:
            now_ms = int(time.time() * 1000)
            items = []
            for record in state.store.agents.values():
                items.append({
                    "agent_id": record["agent_id"],
                    "hostname": record.get("hostname", ""),
                    "last_heartbeat_ms": record.get("last_heartbeat_ms"),
                    "config_version": record.get("config_version", 1),
                    "config": record.get("config", {}),
                    "status": state.agent_status(record, now_ms),
                })
            items.sort(key=lambda r: r["agent_id"])
            return {"items": items[offset:offset + limit], "total": len(items),
                    "limit": limit, "offset": offset}

    @app.put(API + "/agents/{agent_id}/config")
    def update_agent_config(agent_id: str, body: AgentConfigBody,
                            claims: dict = Depends(current_principal)):
        require(claims, "admin")
        with state.lock:
            record = state.store.agents.get(agent_id)
            if record is None:
                raise HTTPException(404, f"unknown agent {agent_id!r}")
            if body.mode is not None:
                if body.mode not in ("local", "forward"):
                    raise HTTPException(400, f"unknown mode {body.mode!r}")
                record["config"]["mode"] = body.mode
            if body.heartbeat is not None:
                if body.heartbeat <= 0:
                    raise HTTPException(400, "heartbeat must be positive")
                record["config"]["heartbeat"] = body.heartbeat
            if body.batch_max is not None:
                if body.batch_max < 1:
                    raise HTTPException(400, "batch_max must be >= 1")
                record["config"]["batch_max"] = body.batch_max
            record["config_version"] = record.get("config_version", 1) + 1
            state.store.save_snapshot()
            return {"agent_id": agent_id, "config": record["config"],
                    "config_version": record["config_version"]}

    # -- asset management endpoints -------------------------------------------

    @app.get(API + "/assets")
    def list_assets(claims: dict = Depends(current_principal),
                    limit: int = 100, offset: int = 0):
        with state.lock:
            items = sorted(state.store.assets.values(), key=lambda a: a["asset_id"])
            return {"items": items[offset:offset + limit], "total": len(items),
                    "limit": limit, "offset": offset}

    @app.put(API + "/assets")
    def upsert_asset(body: AssetBody, claims: dict = Depends(current_principal)):
        require(claims, "admin")
        with state.lock:
            doc = body.model_dump()
            state.store.assets[body.asset_id] = doc
            state._index_asset(doc)
            state.store.save_snapshot()
            return doc

    @app.get(API + "/assets/{asset_id}/status")
    def asset_status(asset_id: str, claims: dict = Depends(current_principal)):
        with state.lock:
            asset = state.store.assets.get(asset_id)
            if asset is None:
                raise HTTPException(404, f"unknown asset {asset_id!r}")
            agent = state.store.agents.get(asset.get("agent_id", ""))
            open_alerts = [
                a for a in state.all_alerts().values()
                if a.agent_id == asset.get("agent_id")
                and a.status in (AlertStatus.OPEN, AlertStatus.ACKNOWLEDGED)
            ]
            max_risk = max((a.risk_score for a in open_alerts), default=0.0)
            return {
                "asset_id": asset_id,
                "agent_id": asset.get("agent_id", ""),
                "criticality": asset.get("criticality", 0.5),
                "agent_status": state.agent_status(agent) if agent else "offline",
                "open_alerts": len(open_alerts),
                "max_risk": max_risk,
                "tier": classify_risk(max_risk),
                "isolated": asset.get("agent_id", "") in state.actuator.ledger.isolated_assets,
            }

    # -- event management endpoints -------------------------------------------

    @app.post(API + "/events")
    def submit_events(body: EnvelopeBody):
        env = Envelope.from_dict(body.model_dump())
        with state.lock:
            record = state.store.agents.get(env.agent_id)
            creds = None
            if record is not None:
                creds = AgentCredentials(agent_id=env.agent_id,
                                         shared_secret=bytes.fromhex(record["secret_hex"]))
            vstate = state._verify_state(env.agent_id)
            verdict = verify_envelope(env, creds, vstate)
            if not verdict.accepted:
                raise HTTPException(401, verdict.reason)

            try:
                payload = json.loads(base64.b64decode(env.body))
            except (ValueError, json.JSONDecodeError) as exc:
                raise HTTPException(400, f"undecodable envelope body: {exc}") from exc

            kind = payload.get("kind", "events")
            items = payload.get("items", [])
            alert_ids: list[str] = []

            if kind == "heartbeat":
                if record is not None:
                    record["last_heartbeat_ms"] = int(time.time() * 1000)
                return {"accepted_count": 0, "alert_ids": []}

            if kind == "events":
                try:
                    events = [event_from_dict(doc) for doc in items]
                except EventParseError as exc:
                    # Atomicity: a malformed batch rejects the whole envelope.
                    raise HTTPException(400, f"malformed batch: {exc}") from exc
                state.store.append_log({
                    "kind": "events", "agent_id": env.agent_id, "seq": env.seq,
                    "received_ts": format_timestamp(datetime.now(timezone.utc)),
                    "items": [event_to_dict(e) for e in events],
                })
                outcomes = [state.pipeline.process(e) for e in events]
                state._record_outcomes(outcomes)
                touched = {a.id for o in outcomes for a in o.alerts}
                alert_ids = sorted(touched)
                state.maybe_snapshot()
                return {"accepted_count": len(events), "alert_ids": alert_ids}

            if kind == "alerts":
                try:
                    alerts = [alert_from_dict(doc) for doc in items]
                except (KeyError, ValueError) as exc:
                    raise HTTPException(400, f"malformed alert batch: {exc}") from exc
                state.store.append_log({
                    "kind": "alerts", "agent_id": env.agent_id, "seq": env.seq,
                    "received_ts": format_timestamp(datetime.now(timezone.utc)),
                    "items": [alert_to_dict(a) for a in alerts],
                })
                for alert in alerts:
                    state.uploaded_alerts[alert.id] = alert
                    alert_ids.append(alert.id)
                state.maybe_snapshot()
                return {"accepted_count": len(alerts), "alert_ids": alert_ids}

            raise HTTPException(400, f"unknown envelope kind {kind!r}")

    @app.get(API + "/events")
    def query_events(claims: dict = Depends(current_principal),
                     agent: str | None = None, category: str | None = None,
                     from_ts: str | None = Query(default=None, alias="from"),
                     to_ts: str | None = Query(default=None, alias="to"),
                     limit: int = 100, offset: int = 0):
        lo = parse_timestamp(from_ts).timestamp() if from_ts else None
        hi = parse_timestamp(to_ts).timestamp() if to_ts else None
        matched: list[dict] = []
        with state.lock:
            for entry in state.store.iter_log():
                if entry.get("kind") != "events":
                    continue
                if agent and entry.get("agent_id") != agent:
                    continue
                for doc in entry.get("items", ()):
                    if category and doc.get("category") != category:
                        continue
                    if lo is not None or hi is not None:
                        ts = parse_timestamp(doc["ts"]).timestamp()
                        if (lo is not None and ts < lo) or (hi is not None and ts > hi):
                            continue
                    matched.append(doc)
        return {"items": matched[offset:offset + limit], "total": len(matched),
                "limit": limit, "offset": offset}

    # -- alert management endpoints -------------------------------------------

    @app.get(API + "/alerts")
    def list_alerts(claims: dict = Depends(current_principal),
                    status: str | None = None, tier: str | None = None,
                    agent: str | None = None, limit: int = 100, offset: int = 0):
        with state.lock:
            alerts = list(state.all_alerts().values())
        if status:
            alerts = [a for a in alerts if a.status.value == status]
        if tier:
            alerts = [a for a in alerts if a.tier == tier]
        if agent:
            alerts = [a for a in alerts if a.agent_id == agent]
        alerts.sort(key=lambda a: (-_TIER_RANK[a.tier], -a.created_ts.timestamp()))
        return {"items": [alert_to_dict(a) for a in alerts[offset:offset + limit]],
                "total": len(alerts), "limit": limit, "offset": offset}

    @app.post(API + "/alerts", status_code=201)
    def create_alert(body: AlertCreateBody, claims: dict = Depends(current_principal)):
        require(claims, "analyst")
        if body.severity not in ("low", "medium", "high", "critical"):
            raise HTTPException(400, f"unknown severity {body.severity!r}")
        with state.lock:
            for tid in body.technique_ids:
                if state.taxonomy.lookup_technique(tid) is None:
                    raise HTTPException(400, f"unknown technique {tid!r}")
            factors = RiskFactors(
                severity_score={"low": 0.25, "medium": 0.5, "high": 0.75,
                                "critical": 1.0}[body.severity],
                asset_criticality=state.profiles.asset_criticality(body.agent_id),
            )
            score = compute_risk(factors, state.weights)
            alert = Alert(
                id=str(uuid.uuid4()), agent_id=body.agent_id,
                created_ts=datetime.now(timezone.utc),
                risk_score=score, tier=classify_risk(score),
                technique_ids=tuple(body.technique_ids), factors=factors,
                notes=[body.note] if body.note else [],
            )
            state.manual_alerts[alert.id] = alert
            state.store.manual_alerts.append(alert_to_dict(alert))
            state.store.save_snapshot()
            return alert_to_dict(alert)

    @app.patch(API + "/alerts/{alert_id}")
    def patch_alert(alert_id: str, body: AlertPatchBody,
                    claims: dict = Depends(current_principal)):
        require(claims, "analyst")
        with state.lock:
            alert = state.find_alert(alert_id)
            if alert is None:
                raise HTTPException(404, f"unknown alert {alert_id!r}")
            if body.status is not None:
                try:
                    target = AlertStatus(body.status)
                except ValueError as exc:
                    raise HTTPException(400, f"unknown status {body.status!r}") from exc
                try:
                    alert.transition(target)
                except IllegalTransition as exc:
                    raise HTTPException(409, str(exc)) from exc
            if body.assignee is not None:
                alert.assignee = body.assignee
            if body.note:
                alert.notes.append(body.note)
            state.store.alert_overlays[alert_id] = {
                "status": alert.status.value, "assignee": alert.assignee,
                "notes": alert.notes,
            }
            state.store.append_audit({
                "ts": format_timestamp(datetime.now(timezone.utc)),
                "kind": "alert_update", "alert_id": alert_id,
                "principal": claims["sub"], "status": alert.status.value,
            })
            state.store.save_snapshot()
            return alert_to_dict(alert)

    # -- risk assessment endpoints --------------------------------------------

    @app.post(API + "/risk/score")
    def risk_score(body: RiskScoreBody, claims: dict = Depends(current_principal)):
        try:
            factors = RiskFactors(**body.factors)
            weights = RiskWeights(**body.weights) if body.weights else state.weights
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        score = compute_risk(factors, weights)
        return {"score": score, "tier": classify_risk(score)}

    @app.get(API + "/risk/assets/{asset_id}")
    def asset_risk(asset_id: str, claims: dict = Depends(current_principal)):
        with state.lock:
            asset = state.store.assets.get(asset_id)
            if asset is None:
                raise HTTPException(404, f"unknown asset {asset_id!r}")
            agent_id = asset.get("agent_id", "")
            related = [a for a in state.all_alerts().values() if a.agent_id == agent_id]
            open_alerts = [a for a in related
                           if a.status in (AlertStatus.OPEN, AlertStatus.ACKNOWLEDGED)]
            max_risk = max((a.risk_score for a in open_alerts), default=0.0)
            return {
                "asset_id": asset_id,
                "criticality": asset.get("criticality", 0.5),
                "alerts_total": len(related),
                "alerts_open": len(open_alerts),
                "max_risk": max_risk,
                "tier": classify_risk(max_risk),
            }

    # -- response management endpoints ------------------------------------------

    @app.post(API + "/responses")
    def trigger_response(body: ResponseBody, claims: dict = Depends(current_principal)):
        require(claims, "analyst")
        with state.lock:
            alert = state.find_alert(body.alert_id)
            if alert is None:
                raise HTTPException(404, f"unknown alert {body.alert_id!r}")

            executed: list[dict] = []
            pending: list[dict] = []

            if body.approve:
                now = datetime.now(timezone.utc)
                still_valid = prune_expired(
                    [_action_from_doc(d) for d in state.store.pending_actions.values()],
                    now=now)
                valid_ids = {a.id for a in still_valid}
                state.store.pending_actions = {
                    aid: doc for aid, doc in state.store.pending_actions.items()
                    if aid in valid_ids
                }
                for action_id in body.approve:
                    doc = state.store.pending_actions.pop(action_id, None)
                    if doc is None:
                        raise HTTPException(404, f"no pending action {action_id!r}")
                    if doc["alert_id"] != body.alert_id:
                        raise HTTPException(400, "action does not belong to this alert")
                    action = _action_from_doc(doc)
                    result = state.actuator.execute(action)
                    record = {"action": _action_doc(action), "result": _result_doc(result)}
                    state.store.actions[action.id] = record
                    executed.append(record)
            elif body.kinds:
                require(claims, "admin")  # explicit-kind bypass is admin-only
                try:
                    kinds = [ActionKind(k) for k in body.kinds]
                except ValueError as exc:
                    raise HTTPException(400, str(exc)) from exc
                evidence = state.pipeline._alert_evidence.get(alert.id, [])
                for kind in kinds:
                    target = derive_target(kind, alert.agent_id, evidence)
                    if target is None:
                        raise HTTPException(400, f"no target derivable for {kind.value}")
                    action = ResponseAction(
                        id=action_id_for(alert.id, kind, target), kind=kind,
                        target=target, alert_id=alert.id,
                        requested_ts=datetime.now(timezone.utc),
                    )
                    result = state.actuator.execute(action)
                    record = {"action": _action_doc(action), "result": _result_doc(result)}
                    state.store.actions[action.id] = record
                    executed.append(record)
            else:  # default: policy-driven
                evidence = state.pipeline._alert_evidence.get(alert.id, [])
                actions = select_actions(alert, state.policy, evidence, state.taxonomy)
                for action in actions:
                    if action.mode == PolicyMode.APPROVAL_REQUIRED:
                        doc = _action_doc(action)
                        state.store.pending_actions.setdefault(action.id, doc)
                        pending.append(doc)
                        continue
                    result = state.actuator.execute(action)
                    record = {"action": _action_doc(action), "result": _result_doc(result)}
                    state.store.actions[action.id] = record
                    executed.append(record)

            state.store.append_audit({
                "ts": format_timestamp(datetime.now(timezone.utc)),
                "kind": "response_trigger", "alert_id": body.alert_id,
                "principal": claims["sub"],
                "executed": [r["action"]["id"] for r in executed],
                "pending": [p["id"] for p in pending],
            })
            state.snapshot()
            return {"executed": executed, "pending": pending}

    @app.get(API + "/responses")
    def list_responses(claims: dict = Depends(current_principal),
                       alert_id: str | None = None):
        with state.lock:
            executed = [rec for rec in state.store.actions.values()
                        if alert_id is None or rec["action"]["alert_id"] == alert_id]
            pending = [doc for doc in state.store.pending_actions.values()
                       if alert_id is None or doc["alert_id"] == alert_id]
            results = []
            for rec in executed:
                doc = rec["result"]
                results.append(doc)
            return {
                "executed": executed,
                "pending": pending,
                "metrics": response_metrics([
                    _result_from_doc(doc) for doc in results
                ]),
            }

    # -- machine learning endpoints ---------------------------------------------

    @app.post(API + "/ml/predict")
    def ml_predict(body: PredictBody, claims: dict = Depends(current_principal)):
        if state.model is None:
            raise HTTPException(503, "no model loaded")
        if len(body.values) != FEATURE_COUNT:
            raise HTTPException(400, f"expected {FEATURE_COUNT} values, got {len(body.values)}")
        values = np.asarray(body.values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise HTTPException(400, "feature values must be finite")
        score = anomaly_score(state.model, values)
        return {"anomaly_score": score, "technique_tags": vector_tags(values)}

    @app.get(API + "/ml/status")
    def ml_status(claims: dict = Depends(current_principal)):
        if state.model is None:
            return {"loaded": False}
        return {"loaded": True, "n_trees": state.model.n_trees,
                "psi": state.model.psi, "seed": state.model.seed,
                "height_limit": state.model.height_limit}

    @app.get(API + "/ml/metrics")
    def ml_metrics(claims: dict = Depends(current_principal)):
        with state.lock:
            alerts = state.all_alerts().values()
            by_tier: dict[str, int] = {}
            by_engine: dict[str, int] = {}
            for a in alerts:
                by_tier[a.tier] = by_tier.get(a.tier, 0) + 1
                for d in a.detections:
                    by_engine[d.engine.value] = by_engine.get(d.engine.value, 0) + 1
            return {
                "pipeline": state.pipeline.counters.as_dict(),
                "alerts_by_tier": by_tier,
                "detections_by_engine": by_engine,
                "classifier_degraded": state.pipeline.classifier_degraded(),
            }

    return app


def _result_from_doc(doc: dict):
    from ..respond import ActionResult
    return ActionResult(action_id=doc["action_id"], kind=ActionKind(doc["kind"]),
                        success=doc["success"], duration_ms=doc["duration_ms"],
                        detail=doc.get("detail", ""))
