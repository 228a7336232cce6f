import pytest

from ecdtls import counters
from ecdtls.credentials import generate_pki
from ecdtls.handshake import (MODE_CACHED, MODE_FULL, MICRO_STACK_CAPACITY,
                              HandshakeError, HandshakeSession, MicroStack,
                              MicroStackOverflow, SessionConfig, State,
                              TRANSITIONS)
from ecdtls.scalarmult import CombCache
from ecdtls.transport import exchange_app_data, run_loopback
from ecdtls.x509 import CertCache

FIXED_CLOCK = lambda: 1754784000.0  # mid validity window


def make_pair(curve, pki, mode=MODE_FULL, client_entropy=b"C" * 32,
              server_entropy=b"S" * 32, cert_cache=None):
    client_cfg = SessionConfig(
        role="client", curve=curve, own_cert_der=pki.client.cert_der,
        own_key_d=pki.client.key.d, ca_der=pki.ca_der, mode=mode,
        entropy=client_entropy, expected_peer_cn="server",
        cert_cache=cert_cache, clock=FIXED_CLOCK)
    server_cfg = SessionConfig(
        role="server", curve=curve, own_cert_der=pki.server.cert_der,
        own_key_d=pki.server.key.d, ca_der=pki.ca_der, mode=MODE_FULL,
        entropy=server_entropy, expected_peer_cn="client", clock=FIXED_CLOCK)
    return HandshakeSession(client_cfg), HandshakeSession(server_cfg)


@pytest.fixture(scope="module")
def toy_pki(toy):
    return generate_pki(toy, b"toy-pki-entropy" * 2)


@pytest.fixture(scope="module")
def p256_pki(curves):
    return generate_pki(curves["secp256r1"], b"p256-pki-entropy" * 2)


class TestLoopbackHandshake:
    def test_toy_curve_establishes(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server)
        assert result.established
        assert bytes(client.security.master_secret) == \
            bytes(server.security.master_secret)
        assert client.transcript.digest() == server.transcript.digest()

    def test_secp256r1_establishes(self, curves, p256_pki):
        client, server = make_pair(curves["secp256r1"], p256_pki)
        result = run_loopback(client, server)
        assert result.established
        assert bytes(client.security.master_secret) == \
            bytes(server.security.master_secret)
        assert exchange_app_data(result, b"ping" * 64)

    def test_deterministic_given_seeds(self, toy, toy_pki):
        transcripts = []
        for _ in range(2):
            client, server = make_pair(toy, toy_pki)
            result = run_loopback(client, server)
            assert result.established
            transcripts.append(client.transcript.digest())
        assert transcripts[0] == transcripts[1]

    def test_different_seeds_different_secrets(self, toy, toy_pki):
        c1, s1 = make_pair(toy, toy_pki, client_entropy=b"1" * 32)
        run_loopback(c1, s1)
        c2, s2 = make_pair(toy, toy_pki, client_entropy=b"2" * 32)
        run_loopback(c2, s2)
        assert bytes(c1.security.master_secret) != \
            bytes(c2.security.master_secret)

    def test_app_data_round_trip_1kb(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server)
        payload = bytes(range(256)) * 4
        assert exchange_app_data(result, payload)

    def test_empty_app_payload_allowed(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server)
        datagram = client.seal_app_data(b"")
        assert server.open_app_data(datagram) == b""

    def test_app_data_before_established_rejected(self, toy, toy_pki):
        client, _ = make_pair(toy, toy_pki)
        with pytest.raises(HandshakeError):
            client.seal_app_data(b"too early")

    def test_micro_stack_balanced_with_peak(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server)
        assert result.established
        for session in (client, server):
            assert session.micro_stack.balanced
            assert 0 < session.micro_stack.peak <= MICRO_STACK_CAPACITY

    def test_teardown_zeroizes_keys(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki)
        run_loopback(client, server)
        client.close()
        assert client.security.cleared
        assert bytes(client.security.master_secret) == b"\x00" * 48


class TestCachedMode:
    def test_cached_skips_one_verify(self, toy, toy_pki):
        shared_cache = CertCache()
        # priming run (full verification, inserts the fingerprint)
        client, server = make_pair(toy, toy_pki, mode=MODE_CACHED,
                                   cert_cache=shared_cache)
        assert run_loopback(client, server).established

        full_client, full_server = make_pair(toy, toy_pki, mode=MODE_FULL)
        assert run_loopback(full_client, full_server).established

        cached_client, cached_server = make_pair(toy, toy_pki,
                                                 mode=MODE_CACHED,
                                                 cert_cache=shared_cache)
        assert run_loopback(cached_client, cached_server).established

        full_v = full_client.handshake_counters["ecdsa_verify"]
        cached_v = cached_client.handshake_counters["ecdsa_verify"]
        assert full_v - cached_v == 1
        assert cached_client.handshake_counters["cert_cache_hit"] == 1

    def test_cached_miss_falls_back_to_full(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki, mode=MODE_CACHED)
        result = run_loopback(client, server)
        assert result.established
        assert client.handshake_counters["cert_cache_miss"] == 1


class TestTampering:
    @pytest.mark.parametrize("flight_index", range(10))
    def test_single_byte_tamper_prevents_establishment(self, toy, toy_pki,
                                                       flight_index):
        # tamper one byte in the payload area of the n-th datagram overall
        seen = [0]

        def interceptor(sender, datagrams):
            out = []
            for d in datagrams:
                if seen[0] == flight_index and len(d) > 14:
                    d = bytearray(d)
                    d[14] ^= 0x01  # second payload byte
                    d = bytes(d)
                seen[0] += 1
                out.append(d)
            return out

        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server, interceptor=interceptor)
        tampered_anything = seen[0] > flight_index
        if tampered_anything:
            assert not result.established
            assert not exchange_app_data(result, b"must not flow")

    def test_tampered_server_key_exchange_fails_before_flight5(self, toy,
                                                               toy_pki):
        # flip a byte inside the SKE signature; client must abort its flight 5
        state = {"count": 0}

        def interceptor(sender, datagrams):
            out = []
            for d in datagrams:
                if sender == "server":
                    state["count"] += 1
                    if state["count"] == 3:  # SH, Cert, SKE order
                        d = bytearray(d)
                        d[-2] ^= 0x40
                        d = bytes(d)
                out.append(d)
            return out

        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server, interceptor=interceptor)
        assert not result.established
        assert client.failed
        assert client.failure_reason is not None

    def test_truncated_datagram_just_stalls_or_fails(self, toy, toy_pki):
        def interceptor(sender, datagrams):
            return [d[:10] for d in datagrams] if sender == "server" else datagrams

        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server, interceptor=interceptor)
        assert not result.established


class TestStateMachine:
    def test_no_transitions_out_of_failed(self):
        for (role, state), events in TRANSITIONS.items():
            assert state is not State.FAILED
            assert state is not State.ESTABLISHED

    def test_established_only_via_full_flight_sequence(self):
        # exhaustively walk the per-role transition graphs
        for role in ("client", "server"):
            frontier = [State.INIT]
            paths = {State.INIT: []}
            while frontier:
                state = frontier.pop()
                events = TRANSITIONS.get((role, state), {})
                for event, nxt in events.items():
                    if nxt not in paths or nxt is state:
                        if nxt is not state:
                            paths[nxt] = paths[state] + [event]
                            frontier.append(nxt)
            assert State.ESTABLISHED in paths
            walked = paths[State.ESTABLISHED]
            assert "fail" not in walked
            # the path must traverse every non-terminal protocol phase
            assert len(walked) == len([
                s for (r, s) in TRANSITIONS if r == role])

    def test_steps_after_terminal_state_are_noops(self, toy, toy_pki):
        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server)
        assert result.established
        assert client.client_step([]) == []
        assert server.server_step([]) == []

    def test_wrong_role_step_rejected(self, toy, toy_pki):
        client, _ = make_pair(toy, toy_pki)
        with pytest.raises(HandshakeError):
            client.server_step([])


class TestMicroStack:
    def test_lifo_enforced(self):
        ms = MicroStack(100)
        a = ms.push(10)
        b = ms.push(20)
        with pytest.raises(HandshakeError):
            ms.pop(a)
        ms.pop(b)
        ms.pop(a)
        assert ms.balanced

    def test_overflow_is_hard_error(self):
        ms = MicroStack(64)
        ms.push(60)
        with pytest.raises(MicroStackOverflow):
            ms.push(5)

    def test_peak_watermark(self):
        ms = MicroStack(128)
        with ms.scratch(50):
            with ms.scratch(30):
                pass
        assert ms.peak == 80
        assert ms.balanced


class TestReplayAcrossHandshake:
    def test_replayed_flight_ignored(self, toy, toy_pki):
        captured = []

        def interceptor(sender, datagrams):
            if sender == "client":
                captured.extend(datagrams)
            return datagrams

        client, server = make_pair(toy, toy_pki)
        result = run_loopback(client, server, interceptor=interceptor)
        assert result.established
        # replaying every captured client datagram leaves the server unmoved
        before = server.session_counters.get("ecdsa_verify", 0)
        server.server_step(captured)
        after = server.session_counters.get("ecdsa_verify", 0)
        assert server.established
        assert after == before
