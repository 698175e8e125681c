import hashlib
import hmac as hmac_mod
import random

import pytest

from edrkit.protocol import (
    AgentCredentials, EnrollmentError, Envelope, VerifyState, compute_mac,
    decode_body, enroll_agent, mint_credentials, sign_envelope, verify_envelope,
)

SECRET = bytes(range(32))
CREDS = AgentCredentials(agent_id="agent-01", shared_secret=SECRET)
NOW_MS = 1_750_000_000_000


def _signed(seq=1, ts=NOW_MS, nonce="00" * 16, body=b'{"kind":"events","items":[]}'):
    return sign_envelope(body, CREDS, seq=seq, ts=ts, nonce=nonce)


def test_rfc4231_test_case_2_vector():
    # HMAC-SHA256(key="Jefe", data="what do ya want for nothing?")
    digest = hmac_mod.new(b"Jefe", b"what do ya want for nothing?",
                          hashlib.sha256).hexdigest()
    assert digest == ("5bdcc146bf60754e6a042426089575c7"
                      "5a003f089d2739839dec58b964ec3843")


def test_signing_is_deterministic():
    assert _signed().mac == _signed().mac


def test_body_flip_changes_mac():
    a = _signed(body=b"payload-a")
    b = _signed(body=b"payload-b")
    assert a.mac != b.mac


def test_sign_verify_roundtrip():
    env = _signed()
    state = VerifyState()
    verdict = verify_envelope(env, CREDS, state, now_ms=NOW_MS)
    assert verdict.accepted
    assert state.last_seq == 1
    assert decode_body(env) == b'{"kind":"events","items":[]}'


def test_duplicate_delivery_rejected_stale_seq():
    env = _signed()
    state = VerifyState()
    assert verify_envelope(env, CREDS, state, now_ms=NOW_MS).accepted
    verdict = verify_envelope(env, CREDS, state, now_ms=NOW_MS)
    assert not verdict.accepted
    assert verdict.reason == "stale_seq"


def test_replayed_nonce_rejected_distinctly():
    state = VerifyState()
    assert verify_envelope(_signed(seq=1), CREDS, state, now_ms=NOW_MS).accepted
    # fresh seq, same nonce
    verdict = verify_envelope(_signed(seq=2), CREDS, state, now_ms=NOW_MS)
    assert not verdict.accepted
    assert verdict.reason == "replayed_nonce"


def test_clock_skew_rejected():
    env = _signed(ts=NOW_MS - 600_000)  # ten minutes old
    verdict = verify_envelope(env, CREDS, VerifyState(), now_ms=NOW_MS)
    assert not verdict.accepted
    assert verdict.reason == "clock_skew"


def test_unknown_agent_rejected():
    env = _signed()
    verdict = verify_envelope(env, None, VerifyState(), now_ms=NOW_MS)
    assert not verdict.accepted
    assert verdict.reason == "unknown_agent"


def test_tampered_mac_rejected():
    env = _signed()
    bad = Envelope(**{**env.to_dict(), "mac": "0" * 64})
    verdict = verify_envelope(bad, CREDS, VerifyState(), now_ms=NOW_MS)
    assert not verdict.accepted
    assert verdict.reason == "bad_mac"


def _flip_bit(env: Envelope, rng: random.Random) -> Envelope:
    doc = env.to_dict()
    field = rng.choice(["v", "agent_id", "seq", "ts", "nonce", "body", "mac"])
    if isinstance(doc[field], int):
        doc[field] ^= 1 << rng.randrange(16)
    else:
        raw = bytearray(doc[field].encode("utf-8"))
        raw[rng.randrange(len(raw))] ^= 1 << rng.randrange(8)
        doc[field] = raw.decode("utf-8", "replace")
    return Envelope.from_dict(doc)


def test_single_bit_flip_fuzz_small():
    rng = random.Random(42)
    env = _signed()
    for _ in range(1000):
        mutated = _flip_bit(env, rng)
        verdict = verify_envelope(mutated, CREDS, VerifyState(), now_ms=NOW_MS)
        assert not verdict.accepted


def test_last_seq_tracks_max_accepted():
    state = VerifyState()
    accepted = []
    for seq in (1, 2, 5, 4, 9):
        env = _signed(seq=seq, nonce=f"{seq:032x}")
        if verify_envelope(env, CREDS, state, now_ms=NOW_MS).accepted:
            accepted.append(seq)
    assert accepted == [1, 2, 5, 9]  # 4 arrives after 5: stale
    assert state.last_seq == max(accepted)


def test_credentials_repr_redacts_secret():
    assert "redacted" in repr(CREDS)
    assert SECRET.hex() not in repr(CREDS)


def test_short_secret_rejected():
    with pytest.raises(ValueError):
        AgentCredentials(agent_id="a", shared_secret=b"short")


def test_enrollment_flow():
    registry: dict[str, AgentCredentials] = {}
    creds = enroll_agent({"agent_id": "agent-07", "enrollment_token": "boot"},
                         "boot", registry)
    assert creds.agent_id == "agent-07"
    assert len(creds.shared_secret) >= 32
    with pytest.raises(EnrollmentError, match="already enrolled"):
        enroll_agent({"agent_id": "agent-07", "enrollment_token": "boot"},
                     "boot", registry)
    with pytest.raises(EnrollmentError, match="invalid enrollment token"):
        enroll_agent({"agent_id": "agent-08", "enrollment_token": "wrong"},
                     "boot", registry)


def test_mint_credentials_unique():
    a = mint_credentials("x")
    b = mint_credentials("x")
    assert a.shared_secret != b.shared_secret


def test_canonical_string_field_order():
    mac1 = compute_mac(SECRET, 1, "agent-01", 2, 3, "n", "b")
    mac2 = compute_mac(SECRET, 1, "agent-01", 3, 2, "n", "b")  # seq/ts swapped
    assert mac1 != mac2
