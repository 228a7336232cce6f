"""DTLS 1.2 mutual-authentication handshake as an explicit state machine.

Both roles advance one flight per step call over a reliable in-order datagram
transport.  The fixed suite is ECDHE-ECDSA with AES-128-GCM and SHA-256
transcripts; server certificates can be fingerprint-cached to skip one
certificate verification in later handshakes.

Records are decoded lazily, one datagram at a time, so a ChangeCipherSpec can
switch the read epoch before the Finished record behind it is opened.
"""

from __future__ import annotations

import enum
import os
import time
from typing import Callable, Dict, List, Optional, Tuple

from . import counters, wire
from .aesgcm import AeadKey
from .curve import AffinePoint, CurveError, CurveParams, CurveRegistry, \
    WEIERSTRASS
from .drbg import HmacDrbg
from .ecdsa import EcdsaSignature, KeyPair, SignatureError, ecdsa_sign, \
    ecdsa_verify
from .keyagree import KeyAgreementError, ecdhe_shared
from .prf import tls_prf_sha256
from .record import (CONTENT_ALERT, CONTENT_APPDATA, CONTENT_CCS,
                     CONTENT_HANDSHAKE, DROP_OK, RecordLayer)
from .scalarmult import CombCache
from .sha256 import Sha256, hmac_sha256, sha256
from .x509 import CertCache, X509Error, x509_parse, x509_verify, \
    _dn_common_name

VERIFY_DATA_LEN = 12
MASTER_SECRET_LEN = 48
KEY_BLOCK_LEN = 40  # 16 + 16 + 4 + 4 for AES-128-GCM
MICRO_STACK_CAPACITY = 2048

ALERT_HANDSHAKE_FAILURE = 40

MODE_FULL = "full"
MODE_CACHED = "cached"


class HandshakeError(Exception):
    pass


class MicroStackOverflow(HandshakeError):
    """Scratch arena exceeded its fixed capacity."""


class _Abort(Exception):
    """Internal: handshake must fail with this reason."""

    def __init__(self, reason: str, send_alert: bool = True):
        super().__init__(reason)
        self.reason = reason
        self.send_alert = send_alert


class _FlightIncomplete(Exception):
    """Internal: a record was dropped; wait instead of failing."""


class State(enum.Enum):
    INIT = "INIT"
    HELLO_SENT = "HELLO_SENT"
    COOKIE_WAIT = "COOKIE_WAIT"
    HELLO_EXCHANGED = "HELLO_EXCHANGED"
    KEY_EXCHANGE = "KEY_EXCHANGE"
    CERTS_VERIFIED = "CERTS_VERIFIED"
    FINISHED_WAIT = "FINISHED_WAIT"
    ESTABLISHED = "ESTABLISHED"
    FAILED = "FAILED"


# (role, state) -> {event: next_state}; FAILED and ESTABLISHED are terminal.
TRANSITIONS: Dict[Tuple[str, State], Dict[str, State]] = {
    ("client", State.INIT): {"start": State.HELLO_SENT},
    ("client", State.HELLO_SENT): {"hello_verify": State.COOKIE_WAIT,
                                   "fail": State.FAILED},
    ("client", State.COOKIE_WAIT): {"server_flight": State.HELLO_EXCHANGED,
                                    "fail": State.FAILED},
    ("client", State.HELLO_EXCHANGED): {"certs_ok": State.CERTS_VERIFIED,
                                        "fail": State.FAILED},
    ("client", State.CERTS_VERIFIED): {"keys_ok": State.KEY_EXCHANGE,
                                       "fail": State.FAILED},
    ("client", State.KEY_EXCHANGE): {"flight_sent": State.FINISHED_WAIT,
                                     "fail": State.FAILED},
    ("client", State.FINISHED_WAIT): {"peer_finished": State.ESTABLISHED,
                                      "fail": State.FAILED},
    ("server", State.INIT): {"client_hello": State.COOKIE_WAIT,
                             "fail": State.FAILED},
    ("server", State.COOKIE_WAIT): {"cookie_ok": State.HELLO_EXCHANGED,
                                    "bad_cookie": State.COOKIE_WAIT,
                                    "fail": State.FAILED},
    ("server", State.HELLO_EXCHANGED): {"client_keys": State.KEY_EXCHANGE,
                                        "fail": State.FAILED},
    ("server", State.KEY_EXCHANGE): {"certs_ok": State.CERTS_VERIFIED,
                                     "fail": State.FAILED},
    ("server", State.CERTS_VERIFIED): {"await_finished": State.FINISHED_WAIT,
                                       "fail": State.FAILED},
    ("server", State.FINISHED_WAIT): {"peer_finished": State.ESTABLISHED,
                                      "fail": State.FAILED},
}


class MicroStack:
    """Fixed-capacity LIFO scratch arena for handshake temporaries."""

    def __init__(self, capacity: int = MICRO_STACK_CAPACITY):
        self.capacity = capacity
        self.watermark = 0
        self.peak = 0
        self._sizes: List[int] = []

    def push(self, size: int) -> int:
        if self.watermark + size > self.capacity:
            raise MicroStackOverflow("micro stack overflow: %d + %d > %d"
                                     % (self.watermark, size, self.capacity))
        self._sizes.append(size)
        self.watermark += size
        self.peak = max(self.peak, self.watermark)
        return len(self._sizes) - 1

    def pop(self, handle: int) -> None:
        if not self._sizes or handle != len(self._sizes) - 1:
            raise HandshakeError("micro stack pop out of LIFO order")
        self.watermark -= self._sizes.pop()

    class _Scratch:
        def __init__(self, stack: "MicroStack", size: int):
            self.stack = stack
            self.size = size

        def __enter__(self):
            self.handle = self.stack.push(self.size)
            return self

        def __exit__(self, *exc):
            self.stack.pop(self.handle)

    def scratch(self, size: int) -> "_Scratch":
        return MicroStack._Scratch(self, size)

    @property
    def balanced(self) -> bool:
        return self.watermark == 0


class SecurityParams:
    """Derived key material; zeroized on session teardown."""

    __slots__ = ("master_secret", "client_key", "server_key",
                 "client_salt", "server_salt", "cleared")

    def __init__(self, master_secret: bytes, key_block: bytes):
        self.master_secret = bytearray(master_secret)
        self.client_key = bytearray(key_block[0:16])
        self.server_key = bytearray(key_block[16:32])
        self.client_salt = bytearray(key_block[32:36])
        self.server_salt = bytearray(key_block[36:40])
        self.cleared = False

    def zeroize(self) -> None:
        for buf in (self.master_secret, self.client_key, self.server_key,
                    self.client_salt, self.server_salt):
            for i in range(len(buf)):
                buf[i] = 0
        self.cleared = True


class SessionConfig:
    """Everything one endpoint needs: role, curve, credentials, mode, seed."""

    def __init__(self, role: str, curve: CurveParams, own_cert_der: bytes,
                 own_key_d: int, ca_der: bytes, mode: str = MODE_FULL,
                 entropy: Optional[bytes] = None,
                 expected_peer_cn: Optional[str] = None,
                 peer_label: str = "client",
                 comb_cache: Optional[CombCache] = None,
                 cert_cache: Optional[CertCache] = None,
                 registry: Optional[CurveRegistry] = None,
                 clock: Callable[[], float] = time.time):
        if role not in ("client", "server"):
            raise HandshakeError("role must be client or server")
        if mode not in (MODE_FULL, MODE_CACHED):
            raise HandshakeError("mode must be full or cached")
        if curve.kind != WEIERSTRASS:
            raise HandshakeError("handshake requires a Weierstrass curve")
        self.role = role
        self.curve = curve
        self.mode = mode
        self.own_cert_der = own_cert_der
        self.own_key_d = own_key_d
        self.ca_der = ca_der
        self.entropy = entropy if entropy is not None else os.urandom(32)
        self.expected_peer_cn = expected_peer_cn
        self.peer_label = peer_label
        self.comb_cache = comb_cache if comb_cache is not None else CombCache()
        self.cert_cache = cert_cache if cert_cache is not None else CertCache()
        self.registry = registry
        self.clock = clock


class HandshakeSession:
    """One endpoint of a DTLS 1.2 handshake plus its application-data phase."""

    def __init__(self, config: SessionConfig):
        from .curve import builtin_registry
        self.config = config
        self.registry = config.registry or builtin_registry()
        self.role = config.role
        self.state = State.INIT
        self.failure_reason: Optional[str] = None
        self.micro_stack = MicroStack()
        self.records = RecordLayer()
        self.transcript = Sha256()
        self._recorder = counters.Recorder(label="%s-session" % self.role)
        self._next_send_seq = 0
        self.security: Optional[SecurityParams] = None
        self.handshake_counters: Optional[counters.OpCounters] = None

        with self._recorder:
            self.drbg = HmacDrbg(config.entropy, self.role.encode(),
                                 b"dtls-engine " + self.role.encode())
            self.comb_cache = config.comb_cache
            self.cert_cache = config.cert_cache
            self.own_key = KeyPair(config.own_key_d, config.curve,
                                   cache=self.comb_cache)
            ca = x509_parse(config.ca_der, self.registry)
            self.ca_subject = ca.subject
            self.ca_key = ca.public_key
            self.client_random: Optional[bytes] = None
            self.server_random: Optional[bytes] = None
            self.eph_key: Optional[KeyPair] = None
            self.peer_key: Optional[AffinePoint] = None
            self.peer_eph: Optional[AffinePoint] = None
            if self.role == "server":
                self.cookie_secret = sha256(b"cookie-secret" + config.entropy)

    # -- state plumbing -------------------------------------------------------

    def _advance(self, event: str) -> None:
        table = TRANSITIONS.get((self.role, self.state))
        if table is None or event not in table:
            raise HandshakeError("illegal transition %s from %s"
                                 % (event, self.state))
        self.state = table[event]

    @property
    def established(self) -> bool:
        return self.state is State.ESTABLISHED

    @property
    def failed(self) -> bool:
        return self.state is State.FAILED

    # -- record intake ---------------------------------------------------------

    def _pull(self, pending: List[bytes]) -> Tuple[Optional[str], Optional[bytes]]:
        """Decode datagrams until one yields a record; drops are silent."""
        while pending:
            outcome, ctype, payload = self.records.decode(pending.pop(0))
            if outcome != DROP_OK:
                continue
            if ctype == CONTENT_HANDSHAKE:
                return "handshake", payload
            if ctype == CONTENT_CCS:
                return "ccs", payload
            if ctype == CONTENT_ALERT:
                return "alert", payload
            if ctype == CONTENT_APPDATA:
                return "app", payload
        return None, None

    def _expect_handshake(self, pending: List[bytes],
                          expected_type: int) -> Tuple[bytes, bytes]:
        kind, payload = self._pull(pending)
        if kind is None:
            raise _FlightIncomplete()
        if kind == "alert":
            raise _Abort("peer sent a fatal alert", send_alert=False)
        if kind != "handshake":
            raise _Abort("unexpected %s record mid-flight" % kind)
        try:
            msg_type, _seq, body = wire.parse_handshake(payload)
        except wire.WireError as exc:
            raise _Abort("bad handshake framing: %s" % exc) from None
        if msg_type != expected_type:
            raise _Abort("expected handshake type %d, got %d"
                         % (expected_type, msg_type))
        return payload, body

    # -- transcript and messages ------------------------------------------------

    def _send_handshake(self, msg_type: int, body: bytes,
                        in_transcript: bool = True) -> bytes:
        msg = wire.pack_handshake(msg_type, self._next_send_seq, body)
        self._next_send_seq += 1
        if in_transcript:
            self.transcript.update(msg)
        return self.records.encode(CONTENT_HANDSHAKE, msg)

    def _note_received(self, raw_msg: bytes) -> None:
        self.transcript.update(raw_msg)

    def _cookie_for(self, client_random: bytes) -> bytes:
        return hmac_sha256(self.cookie_secret,
                           self.config.peer_label.encode() + client_random)

    # -- key schedule -----------------------------------------------------------

    def _derive_keys(self, premaster: bytes) -> None:
        ms = self.micro_stack
        buf = bytearray(premaster)
        with ms.scratch(len(buf)), ms.scratch(64), \
                ms.scratch(MASTER_SECRET_LEN + KEY_BLOCK_LEN):
            master = tls_prf_sha256(bytes(buf), b"master secret",
                                    self.client_random + self.server_random,
                                    MASTER_SECRET_LEN)
            key_block = tls_prf_sha256(master, b"key expansion",
                                       self.server_random + self.client_random,
                                       KEY_BLOCK_LEN)
            self.security = SecurityParams(master, key_block)
        for i in range(len(buf)):
            buf[i] = 0

    def _client_write_key(self) -> AeadKey:
        return AeadKey(bytes(self.security.client_key),
                       bytes(self.security.client_salt))

    def _server_write_key(self) -> AeadKey:
        return AeadKey(bytes(self.security.server_key),
                       bytes(self.security.server_salt))

    def _verify_data(self, label: bytes, digest: bytes) -> bytes:
        return tls_prf_sha256(bytes(self.security.master_secret), label,
                              digest, VERIFY_DATA_LEN)

    # -- step drivers -------------------------------------------------------------

    def client_step(self, datagrams: List[bytes]) -> List[bytes]:
        if self.role != "client":
            raise HandshakeError("client_step on a server session")
        return self._step(datagrams, self._client_step_inner)

    def server_step(self, datagrams: List[bytes]) -> List[bytes]:
        if self.role != "server":
            raise HandshakeError("server_step on a client session")
        return self._step(datagrams, self._server_step_inner)

    def _step(self, datagrams: List[bytes], inner) -> List[bytes]:
        if self.state in (State.ESTABLISHED, State.FAILED):
            return []
        pending = list(datagrams)
        with self._recorder:
            try:
                out = inner(pending)
            except _FlightIncomplete:
                out = []  # wait: datagram loss is not a protocol failure
            except _Abort as abort:
                self.failure_reason = abort.reason
                self._advance("fail")
                out = []
                if abort.send_alert:
                    out = [self.records.encode(
                        CONTENT_ALERT, bytes([2, ALERT_HANDSHAKE_FAILURE]))]
            if self.established and self.handshake_counters is None:
                self.handshake_counters = self._recorder.counters.copy()
            return out

    # -- client ---------------------------------------------------------------

    def _client_step_inner(self, pending: List[bytes]) -> List[bytes]:
        if self.state is State.INIT:
            self.client_random = self.drbg.generate(32)
            hello = wire.build_client_hello(
                self.client_random, b"",
                wire.tls_curve_id(self.config.curve.id))
            record = self._send_handshake(wire.HT_CLIENT_HELLO, hello,
                                          in_transcript=False)
            self._advance("start")
            return [record]
        if self.state is State.HELLO_SENT:
            return self._client_handle_hvr(pending)
        if self.state is State.COOKIE_WAIT:
            return self._client_handle_server_flight(pending)
        if self.state is State.FINISHED_WAIT:
            return self._client_handle_server_finished(pending)
        raise HandshakeError("client step in unexpected state %s" % self.state)

    def _client_handle_hvr(self, pending: List[bytes]) -> List[bytes]:
        _, body = self._expect_handshake(pending, wire.HT_HELLO_VERIFY_REQUEST)
        try:
            cookie = wire.parse_hello_verify_request(body)
        except wire.WireError as exc:
            raise _Abort(str(exc)) from None
        hello = wire.build_client_hello(
            self.client_random, cookie, wire.tls_curve_id(self.config.curve.id))
        record = self._send_handshake(wire.HT_CLIENT_HELLO, hello)
        self._advance("hello_verify")
        return [record]

    def _client_handle_server_flight(self, pending: List[bytes]) -> List[bytes]:
        flight = {}
        for expected in (wire.HT_SERVER_HELLO, wire.HT_CERTIFICATE,
                         wire.HT_SERVER_KEY_EXCHANGE,
                         wire.HT_CERTIFICATE_REQUEST,
                         wire.HT_SERVER_HELLO_DONE):
            raw, body = self._expect_handshake(pending, expected)
            self._note_received(raw)
            flight[expected] = body

        try:
            sh = wire.parse_server_hello(flight[wire.HT_SERVER_HELLO])
            cert_ders = wire.parse_certificate(flight[wire.HT_CERTIFICATE])
            ske = wire.parse_server_key_exchange(
                flight[wire.HT_SERVER_KEY_EXCHANGE])
            wire.parse_certificate_request(flight[wire.HT_CERTIFICATE_REQUEST])
        except wire.WireError as exc:
            raise _Abort(str(exc)) from None
        if sh.cipher_suite != wire.CIPHER_ECDHE_ECDSA_AES128_GCM_SHA256:
            raise _Abort("server chose an unknown cipher suite")
        self.server_random = sh.random
        if flight[wire.HT_SERVER_HELLO_DONE] != b"":
            raise _Abort("non-empty ServerHelloDone")
        if len(cert_ders) != 1:
            raise _Abort("expected exactly the server leaf certificate")
        server_key = self._verify_server_certificate(cert_ders[0])
        if server_key is None:
            raise _Abort("server certificate rejected")
        self.peer_key = server_key

        if ske.curve_code != wire.tls_curve_id(self.config.curve.id):
            raise _Abort("server negotiated a different curve")
        try:
            self.peer_eph = AffinePoint.decode(ske.point, self.config.curve)
        except CurveError as exc:
            raise _Abort("bad server ephemeral: %s" % exc) from None
        signed = wire.server_key_exchange_signed_data(
            self.client_random, self.server_random, ske.signed_params)
        with self.micro_stack.scratch(len(signed)), \
                self.micro_stack.scratch(32):
            try:
                sig = EcdsaSignature.from_der(ske.signature_der)
            except SignatureError:
                raise _Abort("undecodable ServerKeyExchange signature") from None
            if not ecdsa_verify(server_key, sha256(signed), sig,
                                self.comb_cache):
                raise _Abort("ServerKeyExchange signature invalid")
        self._advance("server_flight")
        self._advance("certs_ok")

        try:
            self.eph_key = KeyPair.generate(self.config.curve, self.drbg,
                                            self.comb_cache)
            shared = ecdhe_shared(self.eph_key, self.peer_eph, self.comb_cache)
        except (KeyAgreementError, CurveError) as exc:
            raise _Abort("key agreement failed: %s" % exc) from None
        self._derive_keys(shared.to_bytes())
        self._advance("keys_ok")

        out = []
        out.append(self._send_handshake(
            wire.HT_CERTIFICATE,
            wire.build_certificate([self.config.own_cert_der])))
        out.append(self._send_handshake(
            wire.HT_CLIENT_KEY_EXCHANGE,
            wire.build_client_key_exchange(self.eph_key.Q.encode())))
        cv_digest = self.transcript.copy().digest()
        with self.micro_stack.scratch(32):
            cv_sig = ecdsa_sign(self.own_key, cv_digest, self.drbg,
                                cache=self.comb_cache)
        out.append(self._send_handshake(
            wire.HT_CERTIFICATE_VERIFY,
            wire.build_certificate_verify(cv_sig.to_der())))
        out.append(self.records.encode(CONTENT_CCS, b"\x01"))
        self.records.start_write_epoch(self._client_write_key())
        with self.micro_stack.scratch(VERIFY_DATA_LEN + 32):
            finished_digest = self.transcript.copy().digest()
            verify_data = self._verify_data(b"client finished", finished_digest)
        out.append(self._send_handshake(wire.HT_FINISHED, verify_data))
        self._advance("flight_sent")
        return out

    def _verify_server_certificate(self, der: bytes) -> Optional[AffinePoint]:
        """Full mode parses and verifies; a cached-mode hit skips both."""
        expected_cn = self.config.expected_peer_cn
        if self.config.mode == MODE_CACHED:
            entry = self.cert_cache.check(der)
            if entry is not None:
                if entry.curve_id != self.config.curve.id:
                    return None
                if expected_cn is not None and \
                        _dn_common_name(entry.subject) != expected_cn:
                    return None
                return entry.public_key
        try:
            cert = x509_parse(der, self.registry)
        except X509Error:
            return None
        if cert.curve_id != self.config.curve.id:
            return None
        if cert.issuer != self.ca_subject:
            return None
        if expected_cn is not None and cert.subject_cn() != expected_cn:
            return None
        ok, _reason = x509_verify(cert, self.ca_key, int(self.config.clock()),
                                  self.comb_cache)
        if not ok:
            return None
        self.cert_cache.insert(cert)
        return cert.public_key

    def _client_handle_server_finished(self, pending: List[bytes]) -> List[bytes]:
        kind, _payload = self._pull(pending)
        if kind is None:
            raise _FlightIncomplete()
        if kind == "alert":
            raise _Abort("peer sent a fatal alert", send_alert=False)
        if kind != "ccs":
            raise _Abort("expected ChangeCipherSpec before server Finished")
        self.records.start_read_epoch(self._server_write_key())
        raw, body = self._expect_handshake(pending, wire.HT_FINISHED)
        digest = self.transcript.copy().digest()
        if body != self._verify_data(b"server finished", digest):
            raise _Abort("server Finished verification failed")
        self._note_received(raw)
        self._advance("peer_finished")
        return []

    # -- server ---------------------------------------------------------------

    def _server_step_inner(self, pending: List[bytes]) -> List[bytes]:
        if self.state is State.INIT:
            return self._server_handle_first_hello(pending)
        if self.state is State.COOKIE_WAIT:
            return self._server_handle_cookie_hello(pending)
        if self.state is State.HELLO_EXCHANGED:
            return self._server_handle_client_flight(pending)
        raise HandshakeError("server step in unexpected state %s" % self.state)

    def _check_offers(self, hello: wire.ClientHello) -> None:
        if wire.CIPHER_ECDHE_ECDSA_AES128_GCM_SHA256 not in hello.cipher_suites:
            raise _Abort("client does not offer our cipher suite")
        if wire.tls_curve_id(self.config.curve.id) not in hello.curve_codes:
            raise _Abort("client does not offer our curve")

    def _server_handle_first_hello(self, pending: List[bytes]) -> List[bytes]:
        _, body = self._expect_handshake(pending, wire.HT_CLIENT_HELLO)
        try:
            hello = wire.parse_client_hello(body)
        except wire.WireError as exc:
            raise _Abort(str(exc)) from None
        self._check_offers(hello)
        cookie = self._cookie_for(hello.random)
        record = self._send_handshake(wire.HT_HELLO_VERIFY_REQUEST,
                                      wire.build_hello_verify_request(cookie),
                                      in_transcript=False)
        self._advance("client_hello")
        return [record]

    def _server_handle_cookie_hello(self, pending: List[bytes]) -> List[bytes]:
        raw, body = self._expect_handshake(pending, wire.HT_CLIENT_HELLO)
        try:
            hello = wire.parse_client_hello(body)
        except wire.WireError as exc:
            raise _Abort(str(exc)) from None
        self._check_offers(hello)
        if hello.cookie != self._cookie_for(hello.random):
            self._advance("bad_cookie")
            cookie = self._cookie_for(hello.random)
            return [self._send_handshake(
                wire.HT_HELLO_VERIFY_REQUEST,
                wire.build_hello_verify_request(cookie), in_transcript=False)]
        self.client_random = hello.random
        self._note_received(raw)
        self._advance("cookie_ok")

        self.server_random = self.drbg.generate(32)
        curve_code = wire.tls_curve_id(self.config.curve.id)
        out = []
        out.append(self._send_handshake(
            wire.HT_SERVER_HELLO,
            wire.build_server_hello(self.server_random, curve_code)))
        out.append(self._send_handshake(
            wire.HT_CERTIFICATE,
            wire.build_certificate([self.config.own_cert_der])))
        self.eph_key = KeyPair.generate(self.config.curve, self.drbg,
                                        self.comb_cache)
        point = self.eph_key.Q.encode()
        params = bytes([wire.CURVE_TYPE_NAMED]) + \
            curve_code.to_bytes(2, "big") + \
            len(point).to_bytes(1, "big") + point
        signed = wire.server_key_exchange_signed_data(
            self.client_random, self.server_random, params)
        with self.micro_stack.scratch(len(signed)), \
                self.micro_stack.scratch(32):
            sig = ecdsa_sign(self.own_key, sha256(signed), self.drbg,
                             cache=self.comb_cache)
        out.append(self._send_handshake(
            wire.HT_SERVER_KEY_EXCHANGE,
            wire.build_server_key_exchange(curve_code, point, sig.to_der())))
        out.append(self._send_handshake(wire.HT_CERTIFICATE_REQUEST,
                                        wire.build_certificate_request()))
        out.append(self._send_handshake(wire.HT_SERVER_HELLO_DONE, b""))
        return out

    def _server_handle_client_flight(self, pending: List[bytes]) -> List[bytes]:
        raw, body = self._expect_handshake(pending, wire.HT_CERTIFICATE)
        self._note_received(raw)
        try:
            cert_ders = wire.parse_certificate(body)
        except wire.WireError as exc:
            raise _Abort(str(exc)) from None
        if len(cert_ders) != 1:
            raise _Abort("expected exactly the client leaf certificate")
        client_key = self._verify_client_certificate(cert_ders[0])
        if client_key is None:
            raise _Abort("client certificate rejected")
        self.peer_key = client_key

        raw, body = self._expect_handshake(pending, wire.HT_CLIENT_KEY_EXCHANGE)
        self._note_received(raw)
        try:
            point = wire.parse_client_key_exchange(body)
            self.peer_eph = AffinePoint.decode(point, self.config.curve)
            shared = ecdhe_shared(self.eph_key, self.peer_eph, self.comb_cache)
        except (wire.WireError, CurveError, KeyAgreementError) as exc:
            raise _Abort("key agreement failed: %s" % exc) from None
        cv_digest = self.transcript.copy().digest()
        self._derive_keys(shared.to_bytes())
        self._advance("client_keys")

        raw, body = self._expect_handshake(pending, wire.HT_CERTIFICATE_VERIFY)
        try:
            sig = EcdsaSignature.from_der(wire.parse_certificate_verify(body))
        except (wire.WireError, SignatureError) as exc:
            raise _Abort("bad CertificateVerify: %s" % exc) from None
        if not ecdsa_verify(client_key, cv_digest, sig, self.comb_cache):
            raise _Abort("CertificateVerify signature invalid")
        self._note_received(raw)
        self._advance("certs_ok")
        self._advance("await_finished")

        kind, _payload = self._pull(pending)
        if kind is None:
            raise _FlightIncomplete()
        if kind != "ccs":
            raise _Abort("expected ChangeCipherSpec before client Finished")
        self.records.start_read_epoch(self._client_write_key())
        raw, body = self._expect_handshake(pending, wire.HT_FINISHED)
        digest = self.transcript.copy().digest()
        if body != self._verify_data(b"client finished", digest):
            raise _Abort("client Finished verification failed")
        self._note_received(raw)
        self._advance("peer_finished")

        out = [self.records.encode(CONTENT_CCS, b"\x01")]
        self.records.start_write_epoch(self._server_write_key())
        digest = self.transcript.copy().digest()
        verify_data = self._verify_data(b"server finished", digest)
        out.append(self._send_handshake(wire.HT_FINISHED, verify_data))
        return out

    def _verify_client_certificate(self, der: bytes) -> Optional[AffinePoint]:
        try:
            cert = x509_parse(der, self.registry)
        except X509Error:
            return None
        if cert.curve_id != self.config.curve.id:
            return None
        if cert.issuer != self.ca_subject:
            return None
        if self.config.expected_peer_cn is not None and \
                cert.subject_cn() != self.config.expected_peer_cn:
            return None
        ok, _reason = x509_verify(cert, self.ca_key, int(self.config.clock()),
                                  self.comb_cache)
        if not ok:
            return None
        return cert.public_key

    # -- application data --------------------------------------------------------

    def seal_app_data(self, payload: bytes) -> bytes:
        if not self.established:
            raise HandshakeError("session not established")
        with self._recorder:
            counters.record("bytes_sealed", len(payload))
            return self.records.encode(CONTENT_APPDATA, payload)

    def open_app_data(self, datagram: bytes) -> Optional[bytes]:
        if not self.established:
            raise HandshakeError("session not established")
        with self._recorder:
            outcome, ctype, payload = self.records.decode(datagram)
            if outcome != DROP_OK or ctype != CONTENT_APPDATA:
                return None
            counters.record("bytes_opened", len(payload))
            return payload

    # -- accounting ----------------------------------------------------------------

    @property
    def session_counters(self) -> counters.OpCounters:
        return self._recorder.counters.copy()

    def appdata_counters(self) -> counters.OpCounters:
        base = self.handshake_counters or counters.OpCounters()
        return self._recorder.counters.diff(base)

    def close(self) -> None:
        if self.security is not None:
            self.security.zeroize()
