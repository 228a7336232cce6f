"""AES-128 (FIPS 197) and GCM (SP 800-38D), built from the block cipher up.

Only the forward cipher exists: GCM's CTR mode and tag path never decrypt a
block.  GHASH uses a per-key table of the hash subkey times every power of x,
so each block costs table lookups and xors.  Counters: `aes_block` per block
encryption, `ghash_block` per 16-byte GHASH block.
"""

from __future__ import annotations

from . import counters


class AeadError(Exception):
    """GCM usage or format error."""


class AuthenticationError(AeadError):
    """Tag verification failed; no plaintext is released."""


def _build_sbox():
    # multiplicative inverse in GF(2^8) followed by the affine map
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x ^= (x << 1) ^ (0x11B if x & 0x80 else 0)
        x &= 0xFF
    for i in range(255, 512):
        exp[i] = exp[i - 255]
    sbox = [0] * 256
    for v in range(256):
        inv = 0 if v == 0 else exp[255 - log[v]]
        b = inv
        res = 0x63
        for _ in range(4):
            b = ((b << 1) | (b >> 7)) & 0xFF
            res ^= b
        sbox[v] = res ^ inv
    return bytes(sbox)


_SBOX = _build_sbox()
_XTIME = bytes(((v << 1) ^ 0x1B) & 0xFF if v & 0x80 else (v << 1) for v in range(256))
_RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


class Aes128:
    """AES-128 forward cipher with expanded round keys."""

    def __init__(self, key: bytes):
        if len(key) != 16:
            raise AeadError("AES-128 key must be 16 bytes")
        words = [list(key[i:i + 4]) for i in range(0, 16, 4)]
        for i in range(4, 44):
            tmp = list(words[i - 1])
            if i % 4 == 0:
                tmp = tmp[1:] + tmp[:1]
                tmp = [_SBOX[b] for b in tmp]
                tmp[0] ^= _RCON[i // 4 - 1]
            words.append([a ^ b for a, b in zip(words[i - 4], tmp)])
        self._round_keys = [sum((words[4 * r + c] for c in range(4)), [])
                            for r in range(11)]

    def encrypt_block(self, block: bytes) -> bytes:
        if len(block) != 16:
            raise AeadError("block must be 16 bytes")
        counters.record("aes_block")
        rk = self._round_keys
        state = [b ^ k for b, k in zip(block, rk[0])]
        for rnd in range(1, 10):
            state = [_SBOX[b] for b in state]
            state = _shift_rows(state)
            state = _mix_columns(state)
            state = [b ^ k for b, k in zip(state, rk[rnd])]
        state = [_SBOX[b] for b in state]
        state = _shift_rows(state)
        return bytes(b ^ k for b, k in zip(state, rk[10]))


def _shift_rows(s):
    # column-major state: byte (row r, col c) sits at index 4c + r
    return [s[0], s[5], s[10], s[15],
            s[4], s[9], s[14], s[3],
            s[8], s[13], s[2], s[7],
            s[12], s[1], s[6], s[11]]


def _mix_columns(s):
    out = []
    for c in range(0, 16, 4):
        a0, a1, a2, a3 = s[c], s[c + 1], s[c + 2], s[c + 3]
        out.extend((
            _XTIME[a0] ^ (_XTIME[a1] ^ a1) ^ a2 ^ a3,
            a0 ^ _XTIME[a1] ^ (_XTIME[a2] ^ a2) ^ a3,
            a0 ^ a1 ^ _XTIME[a2] ^ (_XTIME[a3] ^ a3),
            (_XTIME[a0] ^ a0) ^ a1 ^ a2 ^ _XTIME[a3],
        ))
    return out


# ---------------------------------------------------------------------------
# GCM

_R = 0xE1 << 120


def _gf_mul_x(v: int) -> int:
    return (v >> 1) ^ _R if v & 1 else v >> 1


class _GhashKey:
    """Hash subkey H with its 128 precomputed x-power multiples."""

    def __init__(self, h: int):
        table = []
        v = h
        for _ in range(128):
            table.append(v)
            v = _gf_mul_x(v)
        self.table = table

    def mul(self, y: int) -> int:
        # product of y and H: xor H*x^i for every set coefficient x^i of y
        # (coefficient of x^i lives at integer bit 127 - i)
        acc = 0
        table = self.table
        i = 0
        while y:
            if y & (1 << 127):
                acc ^= table[i]
            y = (y << 1) & ((1 << 128) - 1)
            i += 1
        return acc


class GcmContext:
    """AES-128-GCM bound to one key; nonces are 96-bit (the fast path)."""

    def __init__(self, key: bytes):
        self._aes = Aes128(key)
        h = int.from_bytes(self._aes.encrypt_block(b"\x00" * 16), "big")
        self._ghash_key = _GhashKey(h)

    def _ghash(self, aad: bytes, data: bytes) -> bytes:
        gh = self._ghash_key
        y = 0
        for chunk in (aad, data):
            for off in range(0, len(chunk), 16):
                counters.record("ghash_block")
                block = chunk[off:off + 16]
                if len(block) < 16:
                    block = block + b"\x00" * (16 - len(block))
                y = gh.mul(y ^ int.from_bytes(block, "big"))
        counters.record("ghash_block")
        lengths = ((len(aad) * 8) << 64) | (len(data) * 8)
        return gh.mul(y ^ lengths).to_bytes(16, "big")

    def _ctr(self, j0: bytes, data: bytes) -> bytes:
        out = bytearray()
        counter = int.from_bytes(j0[12:], "big")
        prefix = j0[:12]
        for off in range(0, len(data), 16):
            counter = (counter + 1) & 0xFFFFFFFF
            keystream = self._aes.encrypt_block(prefix + counter.to_bytes(4, "big"))
            chunk = data[off:off + 16]
            out.extend(a ^ b for a, b in zip(chunk, keystream))
        return bytes(out)

    def seal(self, nonce: bytes, aad: bytes, plaintext: bytes) -> bytes:
        if len(nonce) != 12:
            raise AeadError("GCM nonce must be 96 bits")
        j0 = nonce + b"\x00\x00\x00\x01"
        ciphertext = self._ctr(j0, plaintext)
        s = self._ghash(aad, ciphertext)
        tag = bytes(a ^ b for a, b in zip(self._aes.encrypt_block(j0), s))
        return ciphertext + tag

    def open(self, nonce: bytes, aad: bytes, sealed: bytes) -> bytes:
        if len(nonce) != 12:
            raise AeadError("GCM nonce must be 96 bits")
        if len(sealed) < 16:
            raise AeadError("input shorter than the tag")
        ciphertext, tag = sealed[:-16], sealed[-16:]
        j0 = nonce + b"\x00\x00\x00\x01"
        s = self._ghash(aad, ciphertext)
        expect = bytes(a ^ b for a, b in zip(self._aes.encrypt_block(j0), s))
        # full 16-byte comparison before any plaintext is produced
        if expect != tag:
            raise AuthenticationError("GCM tag mismatch")
        return self._ctr(j0, ciphertext)


class AeadKey:
    """AES-128-GCM key with the 4-byte implicit nonce salt."""

    __slots__ = ("key", "implicit_salt", "_ctx")

    def __init__(self, key: bytes, implicit_salt: bytes):
        if len(key) != 16 or len(implicit_salt) != 4:
            raise AeadError("need a 16-byte key and 4-byte salt")
        self.key = key
        self.implicit_salt = implicit_salt
        self._ctx = GcmContext(key)

    def nonce(self, explicit: bytes) -> bytes:
        if len(explicit) != 8:
            raise AeadError("explicit nonce part must be 8 bytes")
        return self.implicit_salt + explicit


def aes_gcm_seal(key: AeadKey, explicit_nonce: bytes, aad: bytes,
                 plaintext: bytes) -> bytes:
    """ciphertext || 16-byte tag under nonce = salt || explicit part."""
    return key._ctx.seal(key.nonce(explicit_nonce), aad, plaintext)


def aes_gcm_open(key: AeadKey, explicit_nonce: bytes, aad: bytes,
                 sealed: bytes) -> bytes:
    """Inverse of seal; raises AuthenticationError on any mismatch."""
    return key._ctx.open(key.nonce(explicit_nonce), aad, sealed)
