"""Password hashing and JWT session tokens for the management API.

Passwords are hashed with scrypt (memory-hard, salted, stdlib). Session
tokens are compact HS256 JWTs minted and verified here with the stdlib hmac
primitives; the algorithm is pinned to HS256 and anything else is rejected
outright.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
import time

TOKEN_TTL_SECONDS = 8 * 3600

_SCRYPT_N = 2 ** 14
_SCRYPT_R = 8
_SCRYPT_P = 1

ROLES = ("viewer", "analyst", "admin")


class TokenError(ValueError):
    pass


def role_rank(role: str) -> int:
    try:
        return ROLES.index(role)
    except ValueError:
        raise TokenError(f"unknown role {role!r}") from None


def hash_password(password: str, salt: bytes | None = None) -> tuple[str, str]:
    """Return (salt_hex, hash_hex)."""
    if salt is None:
        salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode("utf-8"), salt=salt,
                            n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return salt.hex(), digest.hex()


def verify_password(password: str, salt_hex: str, hash_hex: str) -> bool:
    digest = hashlib.scrypt(password.encode("utf-8"), salt=bytes.fromhex(salt_hex),
                            n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return hmac.compare_digest(digest.hex(), hash_hex)


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _unb64url(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


def mint_token(secret: bytes, sub: str, role: str,
               ttl_seconds: float = TOKEN_TTL_SECONDS,
               now: float | None = None) -> str:
    if role not in ROLES:
        raise TokenError(f"unknown role {role!r}")
    now = time.time() if now is None else now
    header = _b64url(json.dumps({"alg": "HS256", "typ": "JWT"},
                                separators=(",", ":")).encode())
    payload = _b64url(json.dumps(
        {"sub": sub, "role": role, "iat": int(now), "exp": int(now + ttl_seconds)},
        separators=(",", ":")).encode())
    signing_input = f"{header}.{payload}".encode("ascii")
    sig = _b64url(hmac.new(secret, signing_input, hashlib.sha256).digest())
    return f"{header}.{payload}.{sig}"


def verify_token(secret: bytes, token: str, now: float | None = None) -> dict:
    """Return verified claims; raises TokenError on any defect."""
    now = time.time() if now is None else now
    parts = token.split(".")
    if len(parts) != 3:
        raise TokenError("malformed token")
    header_b64, payload_b64, sig_b64 = parts
    try:
        header = json.loads(_unb64url(header_b64))
    except (ValueError, json.JSONDecodeError) as exc:
        raise TokenError("malformed token header") from exc
    if header.get("alg") != "HS256":
        raise TokenError("unsupported token algorithm")

    signing_input = f"{header_b64}.{payload_b64}".encode("ascii")
    expected = _b64url(hmac.new(secret, signing_input, hashlib.sha256).digest())
    if not hmac.compare_digest(expected, sig_b64):
        raise TokenError("bad signature")

    try:
        claims = json.loads(_unb64url(payload_b64))
    except (ValueError, json.JSONDecodeError) as exc:
        raise TokenError("malformed token payload") from exc
    exp = claims.get("exp")
    if not isinstance(exp, (int, float)) or now >= exp:
        raise TokenError("token expired")
    if claims.get("role") not in ROLES:
        raise TokenError("unknown role in token")
    if not claims.get("sub"):
        raise TokenError("missing subject")
    return claims
