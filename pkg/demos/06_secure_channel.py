"""HMAC envelopes and replay protection on the agent channel.

Every upload is signed over the canonical string v|agent|seq|ts|nonce|body;
verification checks the MAC in constant time, then sequence monotonicity,
clock skew, and nonce freshness - each failure with its own reason.
"""

import random

from edrkit.protocol import (
    AgentCredentials, Envelope, VerifyState, sign_json_envelope, verify_envelope,
)

creds = AgentCredentials(agent_id="agent-01", shared_secret=bytes(range(32)))
now_ms = 1_750_000_000_000
state = VerifyState()

env = sign_json_envelope({"kind": "events", "items": []}, creds, seq=1, ts=now_ms)
print("signed envelope:")
for key, value in env.to_dict().items():
    print(f"  {key:9s} {str(value)[:60]}")

print("\nfresh envelope      ->", verify_envelope(env, creds, state, now_ms=now_ms))
print("same envelope again ->", verify_envelope(env, creds, state, now_ms=now_ms))

stale = sign_json_envelope({"kind": "heartbeat"}, creds, seq=2,
                           ts=now_ms - 600_000)
print("ten-minute-old ts   ->", verify_envelope(stale, creds, state, now_ms=now_ms))

reused = sign_json_envelope({"kind": "heartbeat"}, creds, seq=3, ts=now_ms,
                            nonce=env.nonce)
print("reused nonce        ->", verify_envelope(reused, creds, state, now_ms=now_ms))

print("\nbit-flip fuzz (1,000 trials, every field):")
rng = random.Random(0)
rejected = 0
for _ in range(1000):
    doc = env.to_dict()
    field = rng.choice(list(doc))
    if isinstance(doc[field], int):
        doc[field] ^= 1 << rng.randrange(16)
    else:
        raw = bytearray(doc[field].encode())
        raw[rng.randrange(len(raw))] ^= 1 << rng.randrange(8)
        doc[field] = raw.decode("utf-8", "replace")
    if not verify_envelope(Envelope.from_dict(doc), creds, VerifyState(),
                           now_ms=now_ms).accepted:
        rejected += 1
print(f"  rejected {rejected}/1000")
