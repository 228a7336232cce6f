import pytest

from ecdtls import counters
from ecdtls.aesgcm import (AeadError, AeadKey, Aes128, AuthenticationError,
                           GcmContext, aes_gcm_open, aes_gcm_seal)

# McGrew-Viega AES-128-GCM test cases (SP 800-38D validation set)
GCM_K3 = bytes.fromhex("feffe9928665731c6d6a8f9467308308")
GCM_IV3 = bytes.fromhex("cafebabefacedbaddecaf888")
GCM_P3 = bytes.fromhex(
    "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72"
    "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255")
GCM_C3 = bytes.fromhex(
    "42831ec2217774244b7221b784d0d49ce3aa212f2c02a4e035c17e2329aca12e"
    "21d514b25466931c7d8f6a5aac84aa051ba30b396a0aac973d58e091473f5985")
GCM_T3 = bytes.fromhex("4d5c2af327cd64a62cf35abd2ba6fab4")
GCM_A4 = bytes.fromhex("feedfacedeadbeeffeedfacedeadbeefabaddad2")
GCM_T4 = bytes.fromhex("5bc94fbc3221a5db94fae95ae7121a47")


class TestAesCore:
    def test_fips197_appendix_c_vector(self):
        aes = Aes128(bytes.fromhex("000102030405060708090a0b0c0d0e0f"))
        got = aes.encrypt_block(bytes.fromhex("00112233445566778899aabbccddeeff"))
        assert got.hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"

    def test_sp800_38a_ecb_vectors(self):
        aes = Aes128(bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c"))
        pairs = [
            ("6bc1bee22e409f96e93d7e117393172a", "3ad77bb40d7a3660a89ecaf32466ef97"),
            ("ae2d8a571e03ac9c9eb76fac45af8e51", "f5d3d58503b9699de785895a96fdbaaf"),
            ("30c81c46a35ce411e5fbc1191a0a52ef", "43b1cd7f598ece23881b00e3ed030688"),
            ("f69f2445df4f9b17ad2b417be66c3710", "7b0c785e27e8ad3f8223207104725dd4"),
        ]
        for pt, ct in pairs:
            assert aes.encrypt_block(bytes.fromhex(pt)).hex() == ct

    def test_block_counter(self):
        aes = Aes128(b"\x00" * 16)
        with counters.scope() as sc:
            aes.encrypt_block(b"\x00" * 16)
        assert sc.counters["aes_block"] == 1

    def test_bad_key_length(self):
        with pytest.raises(AeadError):
            Aes128(b"short")


class TestGcmKats:
    def test_case1_empty_everything(self):
        ctx = GcmContext(b"\x00" * 16)
        sealed = ctx.seal(b"\x00" * 12, b"", b"")
        assert sealed.hex() == "58e2fccefa7e3061367f1d57a4e7455a"

    def test_case2_single_zero_block(self):
        ctx = GcmContext(b"\x00" * 16)
        sealed = ctx.seal(b"\x00" * 12, b"", b"\x00" * 16)
        assert sealed[:16].hex() == "0388dace60b6a392f328c2b971b2fe78"
        assert sealed[16:].hex() == "ab6e47d42cec13bdf53a67b21257bddf"

    def test_case3_four_blocks(self):
        ctx = GcmContext(GCM_K3)
        sealed = ctx.seal(GCM_IV3, b"", GCM_P3)
        assert sealed[:-16] == GCM_C3
        assert sealed[-16:] == GCM_T3

    def test_case4_with_aad(self):
        ctx = GcmContext(GCM_K3)
        sealed = ctx.seal(GCM_IV3, GCM_A4, GCM_P3[:60])
        assert sealed[:-16] == GCM_C3[:60]
        assert sealed[-16:] == GCM_T4

    def test_decrypt_vector(self):
        ctx = GcmContext(GCM_K3)
        assert ctx.open(GCM_IV3, GCM_A4, GCM_C3[:60] + GCM_T4) == GCM_P3[:60]


class TestGcmBehaviour:
    def test_round_trip_all_lengths(self, rng):
        key = AeadKey(b"\x01" * 16, b"salt")
        for n in list(range(0, 49)) + [63, 64, 65, 127, 128, 255, 511, 512]:
            pt = bytes(rng.randrange(256) for _ in range(n))
            aad = bytes(rng.randrange(256) for _ in range(rng.randrange(20)))
            explicit = n.to_bytes(8, "big")
            sealed = aes_gcm_seal(key, explicit, aad, pt)
            assert len(sealed) == n + 16
            assert aes_gcm_open(key, explicit, aad, sealed) == pt

    def test_tampered_ciphertext_fails(self):
        key = AeadKey(b"\x02" * 16, b"\x00" * 4)
        sealed = bytearray(aes_gcm_seal(key, b"\x00" * 8, b"ad", b"payload"))
        sealed[0] ^= 1
        with pytest.raises(AuthenticationError):
            aes_gcm_open(key, b"\x00" * 8, b"ad", bytes(sealed))

    def test_tampered_aad_fails(self):
        key = AeadKey(b"\x02" * 16, b"\x00" * 4)
        sealed = aes_gcm_seal(key, b"\x00" * 8, b"ad", b"payload")
        with pytest.raises(AuthenticationError):
            aes_gcm_open(key, b"\x00" * 8, b"AD", sealed)

    def test_short_input_is_format_error(self):
        key = AeadKey(b"\x02" * 16, b"\x00" * 4)
        with pytest.raises(AeadError):
            aes_gcm_open(key, b"\x00" * 8, b"", b"\x00" * 15)

    def test_nonce_is_salt_plus_explicit(self):
        key = AeadKey(b"\x07" * 16, b"\xaa\xbb\xcc\xdd")
        assert key.nonce(b"\x01" * 8) == b"\xaa\xbb\xcc\xdd" + b"\x01" * 8

    def test_block_accounting_1kb(self):
        key = AeadKey(b"\x03" * 16, b"\x00" * 4)
        with counters.scope() as sc:
            aes_gcm_seal(key, b"\x00" * 8, b"\x00" * 13, b"\x00" * 1024)
        # 64 CTR blocks + 1 tag mask; 1 aad + 64 data + 1 length block
        assert sc.counters["aes_block"] == 65
        assert sc.counters["ghash_block"] == 66
