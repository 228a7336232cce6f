"""Benchmark scenario builders: measured counter snapshots for the canned
comparisons (comb vs double-and-add, affine vs Jacobian, cached vs full
handshake, prime bit-width sweep) and the standalone application benchmarks.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from . import counters
from .counters import OpCounters
from .credentials import generate_pki
from .curve import CurveRegistry, builtin_registry
from .drbg import HmacDrbg
from .ecdsa import KeyPair
from .energy import Scenario
from .handshake import MODE_CACHED, MODE_FULL, HandshakeSession, SessionConfig
from .keyagree import ecmqv_shared, schnorr_commit, schnorr_respond, \
    schnorr_verify
from .merkle import merkle_prove, merkle_root, merkle_verify
from .scalarmult import CombCache, ecsm_comb, ecsm_double_and_add, \
    ecsm_jacobian
from .transport import run_loopback
from .x509 import CertCache

SWEEP_CURVES = ("secp160r1", "secp192r1", "secp224r1", "secp256r1")

FIXED_BENCH_CLOCK = lambda: 1754784000.0


def _calibration_scalar(curve) -> int:
    return (curve.n * 2 // 3) | 1


def ecsm_scenarios(curve_name: str,
                   registry: Optional[CurveRegistry] = None
                   ) -> Dict[str, Scenario]:
    """Comb (hit and miss), double-and-add, and Jacobian snapshots for one
    fixed calibration scalar."""
    registry = registry or builtin_registry()
    curve = registry.get(curve_name)
    G = curve.generator()
    k = _calibration_scalar(curve)
    config = {"curve": curve_name, "scalar": "calibration"}
    out: Dict[str, Scenario] = {}

    cache = CombCache()
    with counters.scope() as sc:
        ecsm_comb(k, G, cache)
    out["comb_miss"] = Scenario("comb_miss", sc.counters,
                                dict(config, ecsm="comb_miss"))
    with counters.scope() as sc:
        ecsm_comb(k, G, cache)
    out["comb_hit"] = Scenario("comb_hit", sc.counters,
                               dict(config, ecsm="comb_hit"))
    with counters.scope() as sc:
        ecsm_double_and_add(k, G)
    out["double_and_add"] = Scenario("double_and_add", sc.counters,
                                     dict(config, ecsm="double_and_add"))
    with counters.scope() as sc:
        ecsm_jacobian(k, G)
    out["jacobian"] = Scenario("jacobian", sc.counters,
                               dict(config, ecsm="jacobian"))
    return out


def ecsm_sweep(registry: Optional[CurveRegistry] = None
               ) -> List[Tuple[str, Scenario]]:
    """Cache-hit comb snapshot per sweep curve, in bit-width order."""
    return [(name, ecsm_scenarios(name, registry)["comb_hit"])
            for name in SWEEP_CURVES]


# ---------------------------------------------------------------------------
# Handshake scenarios

def _session_pair(curve, pki, mode: str, cert_cache: Optional[CertCache],
                  entropy_tag: bytes) -> Tuple[HandshakeSession,
                                               HandshakeSession]:
    client = HandshakeSession(SessionConfig(
        role="client", curve=curve, own_cert_der=pki.client.cert_der,
        own_key_d=pki.client.key.d, ca_der=pki.ca_der, mode=mode,
        entropy=b"bench-client" + entropy_tag, expected_peer_cn="server",
        cert_cache=cert_cache, clock=FIXED_BENCH_CLOCK))
    server = HandshakeSession(SessionConfig(
        role="server", curve=curve, own_cert_der=pki.server.cert_der,
        own_key_d=pki.server.key.d, ca_der=pki.ca_der, mode=MODE_FULL,
        entropy=b"bench-server" + entropy_tag, expected_peer_cn="client",
        clock=FIXED_BENCH_CLOCK))
    return client, server


def handshake_scenario(curve_name: str, mode: str, seed: bytes = b"bench",
                       registry: Optional[CurveRegistry] = None
                       ) -> Tuple[Scenario, HandshakeSession,
                                  HandshakeSession]:
    """One loopback handshake from a cold process: fresh comb caches, and for
    cached mode a certificate cache primed the way a prior run would leave it.
    The scenario carries the client-side (edge node) counters."""
    registry = registry or builtin_registry()
    curve = registry.get(curve_name)
    with counters.isolated():
        pki = generate_pki(curve, b"bench-pki" + seed)
        cert_cache = None
        if mode == MODE_CACHED:
            cert_cache = CertCache()
            prime_client, prime_server = _session_pair(
                curve, pki, MODE_CACHED, cert_cache, seed + b"-prime")
            if not run_loopback(prime_client, prime_server).established:
                raise RuntimeError("priming handshake failed")
            # only the fingerprint store survives into the measured run
    client, server = _session_pair(curve, pki, mode, cert_cache, seed)
    result = run_loopback(client, server)
    if not result.established:
        raise RuntimeError("benchmark handshake failed: %s / %s"
                           % (client.failure_reason, server.failure_reason))
    scenario = Scenario("handshake_%s" % mode, client.handshake_counters,
                        {"curve": curve_name, "mode": mode, "role": "client"})
    return scenario, client, server


def appdata_scenario(curve_name: str, kilobytes: int = 1,
                     seed: bytes = b"bench",
                     registry: Optional[CurveRegistry] = None
                     ) -> Tuple[Scenario, int]:
    """Streams kilobytes of application data through an established session;
    returns the client-side app-data counters and the byte count."""
    _, client, server = handshake_scenario(curve_name, MODE_FULL, seed,
                                           registry)
    payload = bytes(range(256)) * 4  # 1 KiB
    total = 0
    for _ in range(kilobytes):
        datagram = client.seal_app_data(payload)
        if server.open_app_data(datagram) != payload:
            raise RuntimeError("application data corrupted in flight")
        total += len(payload)
    scenario = Scenario("appdata", client.appdata_counters(),
                        {"curve": curve_name, "mode": "appdata",
                         "kilobytes": str(kilobytes)})
    return scenario, total


# ---------------------------------------------------------------------------
# Standalone application benchmarks

def ecmqv_scenario(curve_name: str, seed: bytes = b"bench",
                   registry: Optional[CurveRegistry] = None
                   ) -> Tuple[Scenario, bool]:
    registry = registry or builtin_registry()
    curve = registry.get(curve_name)
    drbg = HmacDrbg(b"ecmqv" + seed, curve_name.encode())
    cache = CombCache()
    with counters.isolated():
        a_static, a_eph = (KeyPair.generate(curve, drbg, cache)
                           for _ in range(2))
        b_static, b_eph = (KeyPair.generate(curve, drbg, cache)
                           for _ in range(2))
    with counters.scope() as sc:
        ka = ecmqv_shared(a_static, a_eph, b_static.Q, b_eph.Q, cache)
    kb = ecmqv_shared(b_static, b_eph, a_static.Q, a_eph.Q, cache)
    return Scenario("ecmqv", sc.counters,
                    {"curve": curve_name, "app": "ecmqv"}), ka == kb


def schnorr_scenario(curve_name: str, seed: bytes = b"bench",
                     registry: Optional[CurveRegistry] = None
                     ) -> Tuple[Scenario, bool]:
    registry = registry or builtin_registry()
    curve = registry.get(curve_name)
    drbg = HmacDrbg(b"schnorr" + seed, curve_name.encode())
    cache = CombCache()
    with counters.isolated():
        key = KeyPair.generate(curve, drbg, cache)
    rng = random.Random(int.from_bytes(seed, "big"))
    with counters.scope() as sc:
        T, r = schnorr_commit(key, drbg, cache)
        challenge = rng.randrange(1, curve.n)
        s = schnorr_respond(key, r, challenge)
        accepted = schnorr_verify(key.Q, T, challenge, s, cache)
    return Scenario("schnorr", sc.counters,
                    {"curve": curve_name, "app": "schnorr"}), accepted


def merkle_scenario(n_leaves: int = 1024,
                    seed: bytes = b"bench") -> Tuple[Scenario, Dict[str, int]]:
    rng = random.Random(int.from_bytes(seed, "big"))
    leaves = [bytes(rng.randrange(256) for _ in range(32))
              for _ in range(n_leaves)]
    with counters.scope() as sc:
        root = merkle_root(leaves)
    node_hashes = sc.counters.get("sha_message", 0)
    index = rng.randrange(n_leaves)
    with counters.scope() as proof_sc:
        path = merkle_prove(leaves, index)
        ok = merkle_verify(root, leaves[index], index, path)
    info = {"node_hashes": node_hashes, "proof_ok": int(ok),
            "leaves": n_leaves}
    return Scenario("merkle", sc.counters,
                    {"app": "merkle", "leaves": str(n_leaves)}), info
