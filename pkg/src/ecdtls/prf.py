"""TLS 1.2 pseudo-random function: P_SHA256 expansion (RFC 5246 section 5)."""

from __future__ import annotations

from .sha256 import hmac_sha256


def tls_prf_sha256(secret: bytes, label: bytes, seed: bytes, n: int) -> bytes:
    """First n bytes of P_SHA256(secret, label || seed)."""
    full_seed = label + seed
    out = b""
    a = full_seed
    while len(out) < n:
        a = hmac_sha256(secret, a)
        out += hmac_sha256(secret, a + full_seed)
    return out[:n]
