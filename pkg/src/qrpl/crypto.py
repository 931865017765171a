"""Simulated cryptographic suite.

Hashing is real SHA3-256. Signatures, the VRF and zero-knowledge proofs are
hash-backed stand-ins that keep the interfaces, wire sizes and timing
distributions of the post-quantum schemes they model, without their security.
"""
from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass, field
from typing import Any, Callable

from .encoding import decode, decode_bool, decode_int, encode
from .errors import ConstraintViolation, DomainError, MalformedKeyError

DIGEST_SIZE = 32
SECRET_KEY_SIZE = 32

PROOF_SIZE_RANGE = (45_000, 150_000)
PROOF_GEN_MS_RANGE = (200, 500)


@dataclass(frozen=True, order=True)
class HashDigest:
    bytes: bytes

    def __post_init__(self):
        if len(self.bytes) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(self.bytes)}")

    def __hash__(self):
        # digests are hashed constantly in ledger set operations
        return hash(self.bytes)

    def hex(self) -> str:
        return self.bytes.hex()

    def as_fraction(self) -> float:
        """Interpret the digest as a uniform fraction in [0, 1)."""
        return int.from_bytes(self.bytes, "big") / 2 ** (8 * DIGEST_SIZE)

    @classmethod
    def fromhex(cls, s: str) -> HashDigest:
        return cls(bytes.fromhex(s))

    def __repr__(self):
        return f"HashDigest({self.bytes.hex()[:16]}...)"


def hash_bytes(data: bytes) -> HashDigest:
    return HashDigest(hashlib.sha3_256(data).digest())


def _expand(seed: bytes, n: int) -> bytes:
    return hashlib.shake_256(seed).digest(n)


# -- scheme profiles -------------------------------------------------------

@dataclass(frozen=True)
class SchemeProfile:
    name: str
    public_key_bytes: int
    signature_bytes: int
    sign_ops_per_sec: int
    verify_ops_per_sec: int
    security_bits: int

    def __post_init__(self):
        for attr in ("public_key_bytes", "signature_bytes", "sign_ops_per_sec",
                     "verify_ops_per_sec", "security_bits"):
            if getattr(self, attr) <= 0:
                raise DomainError(f"{attr} must be positive")
        if self.signature_bytes < DIGEST_SIZE:
            raise DomainError("signature must hold at least one digest")


ECDSA_P256 = SchemeProfile("ECDSA-P256", 32, 64, 10_000, 5_000, 128)
DILITHIUM2 = SchemeProfile("Dilithium-2", 1312, 2420, 12_000, 6_000, 128)
FALCON512 = SchemeProfile("Falcon-512", 897, 666, 8_000, 7_000, 128)

PROFILES = {p.name: p for p in (ECDSA_P256, DILITHIUM2, FALCON512)}
DEFAULT_PROFILE = DILITHIUM2


@dataclass(frozen=True)
class KeyPair:
    secret_key: bytes = field(repr=False)
    public_key: bytes
    profile: SchemeProfile = DEFAULT_PROFILE

    def __post_init__(self):
        if len(self.public_key) != self.profile.public_key_bytes:
            raise MalformedKeyError("public key length does not match profile")


def public_key_for(secret_key: bytes, profile: SchemeProfile = DEFAULT_PROFILE) -> bytes:
    return _expand(encode(b"qrpl/pk", profile.name, secret_key), profile.public_key_bytes)


def keypair_from_seed(seed: bytes, profile: SchemeProfile = DEFAULT_PROFILE) -> KeyPair:
    if not seed:
        raise MalformedKeyError("empty seed")
    sk = hashlib.sha3_256(encode(b"qrpl/sk", seed)).digest()
    return KeyPair(sk, public_key_for(sk, profile), profile)


def generate_keypair(rng: random.Random, profile: SchemeProfile = DEFAULT_PROFILE) -> KeyPair:
    return keypair_from_seed(rng.getrandbits(256).to_bytes(32, "big"), profile)


def derive_ephemeral(sender_sk: bytes, recipient_pk: bytes, nonce: bytes = b"",
                     profile: SchemeProfile = DEFAULT_PROFILE) -> KeyPair:
    """One-time key pair from h(sender_sk + recipient_pk).

    "+" is concatenation of length-prefixed fields; ``nonce`` separates
    several outputs paid by one sender to one recipient.
    """
    if not sender_sk or not recipient_pk:
        raise MalformedKeyError("ephemeral derivation needs non-empty keys")
    shared = hash_bytes(encode(sender_sk, recipient_pk, nonce))
    return keypair_from_seed(shared.bytes, profile)


# -- signatures ------------------------------------------------------------

def sign(message: bytes, keypair: KeyPair) -> bytes:
    # HMAC tag keyed by the public key, padded to the profile's signature size
    tag = hmac.new(keypair.public_key, message, hashlib.sha3_256).digest()
    pad = _expand(encode(b"qrpl/sig-pad", tag), keypair.profile.signature_bytes - DIGEST_SIZE)
    return tag + pad


def verify(message: bytes, signature: bytes, public_key: bytes,
           profile: SchemeProfile = DEFAULT_PROFILE) -> bool:
    if len(signature) != profile.signature_bytes or len(public_key) != profile.public_key_bytes:
        return False
    tag = hmac.new(public_key, message, hashlib.sha3_256).digest()
    pad = _expand(encode(b"qrpl/sig-pad", tag), profile.signature_bytes - DIGEST_SIZE)
    return hmac.compare_digest(signature, tag + pad)


# -- commitments -----------------------------------------------------------

@dataclass(frozen=True)
class Commitment:
    digest: HashDigest


def commit(value: int, blinding: bytes) -> Commitment:
    if value < 0:
        raise DomainError("cannot commit to a negative value")
    if len(blinding) != 32:
        raise DomainError("blinding must be 32 bytes")
    return Commitment(hash_bytes(encode(b"qrpl/commit", value, blinding)))


def open_commitment(commitment: Commitment, value: int, blinding: bytes) -> bool:
    if value < 0 or len(blinding) != 32:
        return False
    return commit(value, blinding) == commitment


# -- VRF -------------------------------------------------------------------

@dataclass(frozen=True)
class VrfOutput:
    value: HashDigest
    proof: bytes

    @property
    def fraction(self) -> float:
        return self.value.as_fraction()


def _vrf_tag(public_key: bytes, data: bytes, value: HashDigest) -> bytes:
    return hashlib.sha3_256(encode(b"qrpl/vrf-proof", public_key, data, value.bytes)).digest()


def vrf_eval(keypair: KeyPair, data: bytes) -> VrfOutput:
    value = hash_bytes(encode(b"qrpl/vrf", keypair.secret_key, data))
    return VrfOutput(value, _vrf_tag(keypair.public_key, data, value))


def vrf_verify(public_key: bytes, data: bytes, output: VrfOutput) -> bool:
    if len(output.proof) != DIGEST_SIZE:
        return False
    return hmac.compare_digest(output.proof, _vrf_tag(public_key, data, output.value))


# -- simulated zero-knowledge proofs --------------------------------------

@dataclass(frozen=True)
class StatementDescriptor:
    """Public statement plus the predicate a witness must satisfy.

    Only ``kind`` and ``public`` are bound into the digest; the predicate is
    evaluated by the prover directly (transparent-oracle simulation).
    """
    kind: str
    public: tuple = ()
    predicate: Callable[[Any], bool] | None = field(default=None, compare=False, repr=False)

    def digest(self) -> HashDigest:
        return hash_bytes(encode(b"qrpl/stmt", self.kind, list(self.public)))


@dataclass(frozen=True)
class ProofArtifact:
    statement_digest: HashDigest
    simulated_size_bytes: int
    simulated_gen_ms: int
    valid_flag: bool

    def __post_init__(self):
        lo, hi = PROOF_SIZE_RANGE
        if not lo <= self.simulated_size_bytes <= hi:
            raise DomainError("proof size outside simulated range")
        lo, hi = PROOF_GEN_MS_RANGE
        if not lo <= self.simulated_gen_ms <= hi:
            raise DomainError("proof generation time outside simulated range")

    def header(self) -> bytes:
        return encode(self.statement_digest.bytes, self.simulated_size_bytes,
                      self.simulated_gen_ms, self.valid_flag)

    def to_bytes(self) -> bytes:
        """Wire form: header plus a filler body of the simulated proof size."""
        h = self.header()
        return encode(h, _expand(encode(b"qrpl/proof-body", h), self.simulated_size_bytes))

    @classmethod
    def from_bytes(cls, data: bytes) -> ProofArtifact:
        h, body = decode(data)
        digest, size, ms, flag = decode(h)
        proof = cls(HashDigest(digest), decode_int(size), decode_int(ms), decode_bool(flag))
        if body != _expand(encode(b"qrpl/proof-body", h), proof.simulated_size_bytes):
            raise ValueError("proof body does not match header")
        return proof


def _rng_for(statement: StatementDescriptor) -> random.Random:
    return random.Random(statement.digest().bytes)


def prove(statement: StatementDescriptor, witness: Any, rng: random.Random | None = None,
          adversarial: bool = False) -> ProofArtifact:
    """Produce a proof artifact for ``statement``.

    Raises ConstraintViolation when the witness fails the predicate, unless
    ``adversarial`` is set, in which case an artifact with ``valid_flag``
    false is returned instead. Without an explicit ``rng`` the size and time
    samples are seeded from the statement digest.
    """
    if not statement.kind:
        raise DomainError("statement kind must be non-empty")
    rng = rng if rng is not None else _rng_for(statement)
    ok = statement.predicate is None or bool(statement.predicate(witness))
    if not ok and not adversarial:
        raise ConstraintViolation(f"witness does not satisfy {statement.kind!r} statement")
    size = rng.randint(*PROOF_SIZE_RANGE)
    gen_ms = rng.randint(*PROOF_GEN_MS_RANGE)
    return ProofArtifact(statement.digest(), size, gen_ms, ok and not adversarial)


def verify_proof(statement: StatementDescriptor, proof: ProofArtifact) -> bool:
    return proof.valid_flag and proof.statement_digest == statement.digest()
