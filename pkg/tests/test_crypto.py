from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from oracles import chi_square_uniform
from qrpl import crypto
from qrpl.crypto import (DILITHIUM2, ECDSA_P256, FALCON512, PROFILES, HashDigest, ProofArtifact,
                         StatementDescriptor)
from qrpl.encoding import decode, decode_int, encode, encode_int
from qrpl.errors import ConstraintViolation, DomainError, MalformedKeyError


# -- encoding --------------------------------------------------------------

@given(st.integers(min_value=-(2 ** 300), max_value=2 ** 300))
def test_int_encoding_round_trips(n):
    assert decode_int(encode_int(n)) == n


@given(st.lists(st.binary(max_size=64), max_size=8))
def test_field_encoding_round_trips(fields):
    assert decode(encode(*fields)) == fields


def test_encoding_is_injective_on_field_boundaries():
    assert encode(b"ab", b"c") != encode(b"a", b"bc")


def test_truncated_encoding_rejected():
    with pytest.raises(ValueError):
        decode(encode(b"hello")[:-1])


# -- hashing ---------------------------------------------------------------

def test_hash_deterministic_and_distinct():
    assert crypto.hash_bytes(b"x") == crypto.hash_bytes(b"x")
    assert crypto.hash_bytes(b"") != crypto.hash_bytes(b"\x00")


def test_no_collisions_over_a_million_inputs():
    rng = random.Random(1)
    digests = {crypto.hash_bytes(rng.randbytes(64)).bytes for _ in range(10 ** 6)}
    assert len(digests) == 10 ** 6


def test_digest_length_enforced():
    with pytest.raises(ValueError):
        HashDigest(b"short")


# -- keys ------------------------------------------------------------------

def test_ephemeral_derivation_deterministic_and_order_sensitive():
    a, b = crypto.keypair_from_seed(b"a"), crypto.keypair_from_seed(b"b")
    k1 = crypto.derive_ephemeral(a.secret_key, b.public_key)
    assert k1 == crypto.derive_ephemeral(a.secret_key, b.public_key)
    assert k1 != crypto.derive_ephemeral(b.secret_key, a.public_key)
    assert crypto.derive_ephemeral(b"x" * 32, b"y" * 32) != crypto.derive_ephemeral(b"y" * 32, b"x" * 32)


def test_ephemeral_keys_distinct_per_recipient():
    rng = random.Random(7)
    sk = rng.randbytes(32)
    pks = {rng.randbytes(32) for _ in range(10 ** 4)}
    derived = {crypto.derive_ephemeral(sk, pk).public_key for pk in pks}
    assert len(derived) == len(pks)


def test_empty_key_material_rejected():
    with pytest.raises(MalformedKeyError):
        crypto.derive_ephemeral(b"", b"pk")
    with pytest.raises(MalformedKeyError):
        crypto.keypair_from_seed(b"")


def test_public_key_length_must_match_profile():
    kp = crypto.keypair_from_seed(b"k", FALCON512)
    with pytest.raises(MalformedKeyError):
        crypto.KeyPair(kp.secret_key, kp.public_key, DILITHIUM2)


# -- signatures ------------------------------------------------------------

@pytest.mark.parametrize("profile,pk,sig", [(ECDSA_P256, 32, 64), (DILITHIUM2, 1312, 2420), (FALCON512, 897, 666)])
def test_profile_sizes(profile, pk, sig):
    kp = crypto.keypair_from_seed(b"signer", profile)
    s = crypto.sign(b"msg", kp)
    assert (profile.public_key_bytes, profile.signature_bytes) == (pk, sig)
    assert len(kp.public_key) == pk and len(s) == sig
    assert crypto.verify(b"msg", s, kp.public_key, profile)


def test_profiles_table():
    assert set(PROFILES) == {"ECDSA-P256", "Dilithium-2", "Falcon-512"}
    assert crypto.DEFAULT_PROFILE is DILITHIUM2


def test_signature_rejects_flipped_bit_and_wrong_key():
    kp, other = crypto.keypair_from_seed(b"s"), crypto.keypair_from_seed(b"t")
    sig = crypto.sign(b"message", kp)
    assert not crypto.verify(b"messagf", sig, kp.public_key)
    assert not crypto.verify(b"message", sig, other.public_key)
    assert not crypto.verify(b"message", sig[:-1], kp.public_key)


# -- commitments -----------------------------------------------------------

def test_commitment_binding():
    r, r2 = b"\x01" * 32, b"\x02" * 32
    c = crypto.commit(10, r)
    assert crypto.open_commitment(c, 10, r)
    assert not crypto.open_commitment(c, 11, r)
    assert not crypto.open_commitment(c, 10, r2)


def test_commitment_domain():
    with pytest.raises(DomainError):
        crypto.commit(-1, b"\x00" * 32)
    with pytest.raises(DomainError):
        crypto.commit(1, b"\x00")


# -- VRF -------------------------------------------------------------------

def test_vrf_round_trip_and_determinism():
    kp = crypto.keypair_from_seed(b"vrf")
    out = crypto.vrf_eval(kp, b"input")
    assert out == crypto.vrf_eval(kp, b"input")
    assert crypto.vrf_verify(kp.public_key, b"input", out)
    assert not crypto.vrf_verify(kp.public_key, b"other", out)
    assert not crypto.vrf_verify(crypto.keypair_from_seed(b"x").public_key, b"input", out)


def test_vrf_outputs_uniform():
    kp = crypto.keypair_from_seed(b"uniform")
    buckets = [0] * 64
    for i in range(10 ** 5):
        buckets[int(crypto.vrf_eval(kp, i.to_bytes(4, "big")).fraction * 64)] += 1
    assert chi_square_uniform(buckets) > 0.001


# -- proofs ----------------------------------------------------------------

def _balance(total):
    return StatementDescriptor("balance", (total,), lambda parts: sum(parts) == total)


def test_prove_verify_honest_path():
    stmt = _balance(10)
    proof = crypto.prove(stmt, [4, 6])
    assert crypto.verify_proof(stmt, proof)
    assert not crypto.verify_proof(_balance(11), proof)


def test_unsatisfied_witness():
    with pytest.raises(ConstraintViolation):
        crypto.prove(_balance(10), [4, 5])
    bad = crypto.prove(_balance(10), [4, 5], adversarial=True)
    assert not bad.valid_flag and not crypto.verify_proof(_balance(10), bad)


def test_adversarial_mode_invalidates_even_true_statements():
    assert not crypto.prove(_balance(10), [10], adversarial=True).valid_flag


def test_proof_size_and_time_ranges():
    rng = random.Random(3)
    stmt = _balance(0)
    proofs = [crypto.prove(stmt, [], rng=rng) for _ in range(10 ** 4)]
    assert all(45_000 <= p.simulated_size_bytes <= 150_000 for p in proofs)
    assert all(200 <= p.simulated_gen_ms <= 500 for p in proofs)
    sizes = [p.simulated_size_bytes for p in proofs]
    assert abs(sum(sizes) / len(sizes) - 97_500) < 1_500


def test_proof_wire_round_trip():
    proof = crypto.prove(_balance(3), [3])
    data = proof.to_bytes()
    assert len(data) > proof.simulated_size_bytes
    assert ProofArtifact.from_bytes(data) == proof
    tampered = bytearray(data)
    tampered[-1] ^= 1
    with pytest.raises(ValueError):
        ProofArtifact.from_bytes(bytes(tampered))


def test_proof_artifact_range_validated():
    with pytest.raises(DomainError):
        ProofArtifact(crypto.hash_bytes(b""), 10, 300, True)


def test_proof_sizes_seeded_by_statement():
    assert crypto.prove(_balance(5), [5]) == crypto.prove(_balance(5), [5])
