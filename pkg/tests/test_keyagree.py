import random

import pytest

from ecdtls.curve import AffinePoint
from ecdtls.drbg import HmacDrbg
from ecdtls.ecdsa import KeyPair
from ecdtls.keyagree import (KeyAgreementError, ecdhe_shared, ecmqv_shared,
                             schnorr_commit, schnorr_respond, schnorr_verify)
from ecdtls.scalarmult import CombCache, scalar_mul_unchecked

# RFC 5903 section 8.1: ECDH P-256 known answer
RFC5903 = dict(
    i=0xC88F01F510D9AC3F70A292DAA2316DE544E9AAB8AFE84049C62A9C57862D1433,
    gix=0xDAD0B65394221CF9B051E1FECA5787D098DFE637FC90B9EF945D0C3772581180,
    giy=0x5271A0461CDB8252D61F1C456FA3E59AB1F45B33ACCF5F58389E0577B8990BB3,
    r=0xC6EF9C5D78AE012A011164ACB397CE2088685D8F06BF9BE0B283AB46476BEE53,
    grx=0xD12DFB5289C8D4F81208B70270398C342296970A0BCCB74C736FC7554494BF63,
    gry=0x56FBF3CA366CC23E8157854C13C58D6AAC23F046ADA30F8353E74F33039872AB,
    girx=0xD6840F6B42F6EDAFD13116E0E12565202FEF8E9ECE7DCE03812464D04B9442DE,
)


class TestEcdhe:
    def test_rfc5903_known_answer(self, curves):
        c = curves["secp256r1"]
        cache = CombCache()
        alice = KeyPair(RFC5903["i"], c, cache=cache)
        assert (alice.Q.x, alice.Q.y) == (RFC5903["gix"], RFC5903["giy"])
        bob = KeyPair(RFC5903["r"], c, cache=cache)
        assert (bob.Q.x, bob.Q.y) == (RFC5903["grx"], RFC5903["gry"])
        shared = ecdhe_shared(alice, bob.Q, cache)
        assert shared.value == RFC5903["girx"]

    @pytest.mark.parametrize("name", ["secp160r1", "secp192r1", "secp224r1",
                                      "secp256r1"])
    def test_symmetry(self, curves, name):
        c = curves[name]
        drbg = HmacDrbg(name.encode() + b"#" * 32)
        cache = CombCache()
        a = KeyPair.generate(c, drbg, cache)
        b = KeyPair.generate(c, drbg, cache)
        assert ecdhe_shared(a, b.Q, cache) == ecdhe_shared(b, a.Q, cache)

    def test_infinity_peer_rejected(self, curves):
        c = curves["secp256r1"]
        a = KeyPair(7, c)
        with pytest.raises(KeyAgreementError):
            ecdhe_shared(a, c.infinity())

    def test_off_curve_peer_rejected(self, curves):
        c = curves["secp256r1"]
        a = KeyPair(7, c)
        bogus = AffinePoint(c, c.gx, (c.gy + 1) % c.p)
        with pytest.raises(KeyAgreementError):
            ecdhe_shared(a, bogus)

    def test_matches_double_and_add_oracle(self, curves, rng):
        c = curves["secp256r1"]
        d1, d2 = rng.randrange(1, c.n), rng.randrange(1, c.n)
        a = KeyPair(d1, c)
        peer = scalar_mul_unchecked(d2, c.generator())
        want = scalar_mul_unchecked(d1, peer)
        assert ecdhe_shared(a, peer).value == want.x


class TestEcmqv:
    @pytest.mark.parametrize("name", ["secp192r1", "secp256r1"])
    def test_both_parties_agree(self, curves, name):
        c = curves[name]
        drbg = HmacDrbg(b"mqv!" + name.encode())
        cache = CombCache()
        a_stat, a_eph = (KeyPair.generate(c, drbg, cache) for _ in range(2))
        b_stat, b_eph = (KeyPair.generate(c, drbg, cache) for _ in range(2))
        ka = ecmqv_shared(a_stat, a_eph, b_stat.Q, b_eph.Q, cache)
        kb = ecmqv_shared(b_stat, b_eph, a_stat.Q, a_eph.Q, cache)
        assert ka == kb

    def test_differs_from_plain_ecdhe(self, curves):
        c = curves["secp256r1"]
        drbg = HmacDrbg(b"mqv-vs-dh" * 4)
        a_stat, a_eph = (KeyPair.generate(c, drbg) for _ in range(2))
        b_stat, b_eph = (KeyPair.generate(c, drbg) for _ in range(2))
        mqv = ecmqv_shared(a_stat, a_eph, b_stat.Q, b_eph.Q)
        dh = ecdhe_shared(a_eph, b_eph.Q)
        assert mqv != dh

    def test_static_key_binds_result(self, curves):
        c = curves["secp192r1"]
        drbg = HmacDrbg(b"binding" * 5)
        a_stat, a_eph = (KeyPair.generate(c, drbg) for _ in range(2))
        b_stat, b_eph = (KeyPair.generate(c, drbg) for _ in range(2))
        other = KeyPair.generate(c, drbg)
        base = ecmqv_shared(a_stat, a_eph, b_stat.Q, b_eph.Q)
        swapped = ecmqv_shared(other, a_eph, b_stat.Q, b_eph.Q)
        assert base != swapped

    def test_symmetry_many_random_keysets(self, curves):
        c = curves["secp160r1"]
        drbg = HmacDrbg(b"many" * 8)
        cache = CombCache()
        for _ in range(25):
            a_stat, a_eph = (KeyPair.generate(c, drbg, cache) for _ in range(2))
            b_stat, b_eph = (KeyPair.generate(c, drbg, cache) for _ in range(2))
            assert ecmqv_shared(a_stat, a_eph, b_stat.Q, b_eph.Q, cache) == \
                ecmqv_shared(b_stat, b_eph, a_stat.Q, a_eph.Q, cache)


class TestSchnorr:
    def test_honest_transcript_accepts(self, curves, rng):
        c = curves["secp256r1"]
        drbg = HmacDrbg(b"schnorr" * 5)
        key = KeyPair.generate(c, drbg)
        T, r = schnorr_commit(key, drbg)
        challenge = rng.randrange(c.n)
        s = schnorr_respond(key, r, challenge)
        assert schnorr_verify(key.Q, T, challenge, s)

    def test_zero_challenge_degenerates(self, curves):
        c = curves["secp256r1"]
        drbg = HmacDrbg(b"zero" * 8)
        key = KeyPair.generate(c, drbg)
        T, r = schnorr_commit(key, drbg)
        s = schnorr_respond(key, r, 0)
        assert s == r
        assert schnorr_verify(key.Q, T, 0, s)

    def test_wrong_secret_rejected(self, curves, rng):
        c = curves["secp192r1"]
        drbg = HmacDrbg(b"soundness" * 3)
        honest = KeyPair.generate(c, drbg)
        liar = KeyPair.generate(c, drbg)
        T, r = schnorr_commit(liar, drbg)
        challenge = rng.randrange(1, c.n)
        s = schnorr_respond(liar, r, challenge)
        assert not schnorr_verify(honest.Q, T, challenge, s)
