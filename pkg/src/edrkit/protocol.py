"""Agent-to-server secure channel: enrollment, HMAC-signed envelopes,
replay protection, and heartbeats.

Envelope integrity is an application-layer guarantee: the MAC is
HMAC-SHA256 over the canonical pipe-joined string

    v|agent_id|seq|ts|nonce|body

with raw field values in that exact order (no JSON canonicalization), so the
signed string is reproducible bit for bit from the envelope fields alone.
Transport security (TLS) is a deployment concern outside this module.

Replay protection is threefold: per-agent strictly increasing sequence
numbers, a bounded clock-skew window on the envelope timestamp, and a nonce
cache spanning twice the skew window (any replay inside the accept window
hits the nonce cache; older replays fail the skew check first).
"""

from __future__ import annotations

import base64
import hmac
import json
import re
import secrets
import time
from dataclasses import dataclass, field
from hashlib import sha256

PROTOCOL_VERSION = 1

_MAC_RE = re.compile(r"^[0-9a-f]{64}$")

DEFAULT_SKEW_SECONDS = 300.0
SECRET_BYTES = 32


class EnrollmentError(ValueError):
    pass


@dataclass(frozen=True)
class AgentCredentials:
    agent_id: str
    shared_secret: bytes
    issued_ts: float = 0.0

    def __post_init__(self):
        if len(self.shared_secret) < SECRET_BYTES:
            raise ValueError(f"shared secret must be at least {SECRET_BYTES} bytes")

    def __repr__(self) -> str:  # keep secrets out of logs and tracebacks
        return f"AgentCredentials(agent_id={self.agent_id!r}, shared_secret=<redacted>)"


@dataclass(frozen=True)
class Envelope:
    v: int
    agent_id: str
    seq: int
    ts: int              # unix milliseconds
    nonce: str           # 16 random bytes, hex
    body: str            # base64 payload
    mac: str             # hex HMAC-SHA256

    def to_dict(self) -> dict:
        return {"v": self.v, "agent_id": self.agent_id, "seq": self.seq,
                "ts": self.ts, "nonce": self.nonce, "body": self.body,
                "mac": self.mac}

    @classmethod
    def from_dict(cls, doc: dict) -> "Envelope":
        return cls(v=int(doc["v"]), agent_id=str(doc["agent_id"]),
                   seq=int(doc["seq"]), ts=int(doc["ts"]),
                   nonce=str(doc["nonce"]), body=str(doc["body"]),
                   mac=str(doc["mac"]))


def canonical_string(v: int, agent_id: str, seq: int, ts: int, nonce: str, body: str) -> bytes:
    return f"{v}|{agent_id}|{seq}|{ts}|{nonce}|{body}".encode("utf-8")


def compute_mac(secret: bytes, v: int, agent_id: str, seq: int, ts: int,
                nonce: str, body: str) -> str:
    return hmac.new(secret, canonical_string(v, agent_id, seq, ts, nonce, body),
                    sha256).hexdigest()


def sign_envelope(body: bytes, creds: AgentCredentials, seq: int,
                  ts: int | None = None, nonce: str | None = None) -> Envelope:
    """Sign a payload; deterministic once seq/ts/nonce are fixed."""
    if ts is None:
        ts = int(time.time() * 1000)
    if nonce is None:
        nonce = secrets.token_hex(16)
    body_b64 = base64.b64encode(body).decode("ascii")
    mac = compute_mac(creds.shared_secret, PROTOCOL_VERSION, creds.agent_id,
                      seq, ts, nonce, body_b64)
    return Envelope(v=PROTOCOL_VERSION, agent_id=creds.agent_id, seq=seq,
                    ts=ts, nonce=nonce, body=body_b64, mac=mac)


def sign_json_envelope(payload: dict, creds: AgentCredentials, seq: int,
                       ts: int | None = None, nonce: str | None = None) -> Envelope:
    return sign_envelope(json.dumps(payload, separators=(",", ":")).encode("utf-8"),
                         creds, seq, ts=ts, nonce=nonce)


def decode_body(env: Envelope) -> bytes:
    return base64.b64decode(env.body.encode("ascii"), validate=True)


@dataclass
class VerifyState:
    """Per-agent verification state; single writer per agent."""

    last_seq: int = 0
    nonce_cache: dict[str, int] = field(default_factory=dict)
    skew_window: float = DEFAULT_SKEW_SECONDS

    def prune(self, now_ms: int) -> None:
        horizon = now_ms - int(2 * self.skew_window * 1000)
        if len(self.nonce_cache) > 4096:
            self.nonce_cache = {n: t for n, t in self.nonce_cache.items() if t >= horizon}


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    reason: str = ""          # bad_mac | stale_seq | clock_skew | replayed_nonce | unknown_agent


def verify_envelope(env: Envelope, creds: AgentCredentials | None,
                    state: VerifyState, now_ms: int | None = None) -> VerifyResult:
    """Check MAC (constant time), sequence monotonicity, clock skew, and
    nonce freshness; state updates atomically only on acceptance."""
    if creds is None or env.agent_id != creds.agent_id:
        return VerifyResult(False, "unknown_agent")
    if now_ms is None:
        now_ms = int(time.time() * 1000)

    # Strict wire format: exactly 64 lowercase hex chars. Parsing leniently
    # (e.g. case-insensitive hex) would let re-encoded MACs through.
    if not _MAC_RE.match(env.mac):
        return VerifyResult(False, "bad_mac")
    expected = compute_mac(creds.shared_secret, env.v, env.agent_id, env.seq,
                           env.ts, env.nonce, env.body)
    if not hmac.compare_digest(expected.encode("ascii"), env.mac.encode("ascii")):
        return VerifyResult(False, "bad_mac")
    if env.seq <= state.last_seq:
        return VerifyResult(False, "stale_seq")
    if abs(now_ms - env.ts) > state.skew_window * 1000:
        return VerifyResult(False, "clock_skew")
    nonce_horizon = now_ms - int(2 * state.skew_window * 1000)
    seen_at = state.nonce_cache.get(env.nonce)
    if seen_at is not None and seen_at >= nonce_horizon:
        return VerifyResult(False, "replayed_nonce")

    state.last_seq = env.seq
    state.nonce_cache[env.nonce] = now_ms
    state.prune(now_ms)
    return VerifyResult(True)


def mint_credentials(agent_id: str, now: float | None = None) -> AgentCredentials:
    return AgentCredentials(agent_id=agent_id,
                            shared_secret=secrets.token_bytes(SECRET_BYTES),
                            issued_ts=now if now is not None else time.time())


def enroll_agent(request: dict, bootstrap_token: str,
                 registry: dict[str, AgentCredentials]) -> AgentCredentials:
    """Mint credentials for a new agent against the configured bootstrap
    token. Duplicate ids are rejected; re-enrollment requires an admin revoke
    first."""
    agent_id = str(request.get("agent_id", "")).strip()
    token = str(request.get("enrollment_token", ""))
    if not agent_id:
        raise EnrollmentError("agent_id required")
    if not hmac.compare_digest(token, bootstrap_token):
        raise EnrollmentError("invalid enrollment token")
    if agent_id in registry:
        raise EnrollmentError(f"agent {agent_id!r} already enrolled")
    creds = mint_credentials(agent_id)
    registry[agent_id] = creds
    return creds
