"""Central-bank oracle: threshold-approved mint and redeem at 1:1 parity.

Every mint or redeem is appended to a hash-chained audit trail. There is no
operation that grows a balance over time, so holdings cannot accrue interest.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from . import crypto
from .crypto import HashDigest, KeyPair
from .encoding import encode
from .errors import DomainError, ThresholdError
from .ledger import LedgerState, UtxoToken, burn_tokens, mint_token

GENESIS_DIGEST = HashDigest(bytes(32))


@dataclass(frozen=True)
class OracleConfig:
    signers: tuple[bytes, ...]
    threshold: int
    profile: crypto.SchemeProfile = crypto.DEFAULT_PROFILE
    parity: tuple[int, int] = (1, 1)

    def __post_init__(self):
        object.__setattr__(self, "signers", tuple(self.signers))
        if not 1 <= self.threshold <= len(self.signers):
            raise DomainError("threshold must be between 1 and the number of signers")
        if self.parity != (1, 1):
            raise DomainError("parity is fixed at 1:1")


@dataclass(frozen=True)
class Approval:
    signer_pk: bytes
    signature: bytes


def approve(signer: KeyPair, message: bytes) -> Approval:
    return Approval(signer.public_key, crypto.sign(message, signer))


def count_approvals(config: OracleConfig, message: bytes, approvals: Sequence[Approval]) -> int:
    """Distinct configured signers with a valid signature over ``message``."""
    good = {a.signer_pk for a in approvals
            if a.signer_pk in config.signers
            and crypto.verify(message, a.signature, a.signer_pk, config.profile)}
    return len(good)


def _require_threshold(config, message, approvals):
    n = count_approvals(config, message, approvals)
    if n < config.threshold:
        raise ThresholdError(f"{n} valid approvals, {config.threshold} required")


@dataclass(frozen=True)
class MintEvent:
    event_id: int
    kind: str  # "mint" or "redeem"
    fiat_amount: int
    tokens_minted: int  # negative for redemptions
    approvals: tuple[Approval, ...]
    height: int
    token_ids: tuple[HashDigest, ...]
    prev_digest: HashDigest
    digest: HashDigest = field(default=GENESIS_DIGEST)

    def body(self) -> bytes:
        return encode(self.event_id, self.kind, self.fiat_amount, self.tokens_minted,
                      [encode(a.signer_pk, a.signature) for a in self.approvals],
                      self.height, [t.bytes for t in self.token_ids], self.prev_digest.bytes)

    def compute_digest(self) -> HashDigest:
        return crypto.hash_bytes(self.body())

    def to_json(self) -> dict:
        return {
            "event_id": self.event_id, "kind": self.kind, "fiat_amount": self.fiat_amount,
            "tokens_minted": self.tokens_minted, "height": self.height,
            "approvals": [a.signer_pk.hex()[:16] for a in self.approvals],
            "token_ids": [t.hex() for t in self.token_ids],
            "prev_digest": self.prev_digest.hex(), "digest": self.digest.hex(),
        }


class AuditTrail:
    """Append-only, hash-chained list of issuance events."""

    def __init__(self):
        self._events: list[MintEvent] = []

    def __len__(self):
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    @property
    def events(self) -> tuple[MintEvent, ...]:
        return tuple(self._events)

    @property
    def head(self) -> HashDigest:
        return self._events[-1].digest if self._events else GENESIS_DIGEST

    @property
    def next_id(self) -> int:
        return len(self._events)

    def append(self, event: MintEvent) -> None:
        if event.event_id != self.next_id or event.prev_digest != self.head:
            raise ValueError("event does not extend the trail")
        if event.digest != event.compute_digest():
            raise ValueError("event digest mismatch")
        self._events.append(event)

    def verify(self) -> bool:
        prev = GENESIS_DIGEST
        for i, ev in enumerate(self._events):
            if ev.event_id != i or ev.prev_digest != prev or ev.digest != ev.compute_digest():
                return False
            prev = ev.digest
        return True

    def net_issuance(self) -> int:
        return sum(ev.tokens_minted for ev in self._events)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(ev.to_json(), sort_keys=True) + "\n" for ev in self._events)


def _seal(ev: MintEvent) -> MintEvent:
    return MintEvent(ev.event_id, ev.kind, ev.fiat_amount, ev.tokens_minted, ev.approvals,
                     ev.height, ev.token_ids, ev.prev_digest, ev.compute_digest())


def mint_message(trail: AuditTrail, fiat_amount: int, recipient_pk: bytes) -> bytes:
    return encode(b"qrpl/mint", trail.next_id, trail.head.bytes, fiat_amount, recipient_pk)


def redeem_message(trail: AuditTrail, token_ids: Sequence[HashDigest]) -> bytes:
    return encode(b"qrpl/redeem", trail.next_id, trail.head.bytes, [t.bytes for t in token_ids])


def mint(config: OracleConfig, ledger: LedgerState, fiat_amount: int,
         approvals: Sequence[Approval], recipient: KeyPair,
         trail: AuditTrail) -> tuple[LedgerState, MintEvent]:
    """Mint ``fiat_amount`` tokens against a verified deposit.

    ``recipient`` is the depositor's one-time key; only its public half is
    recorded on the ledger.
    """
    if fiat_amount <= 0:
        raise DomainError("deposit must be positive")
    _require_threshold(config, mint_message(trail, fiat_amount, recipient.public_key), approvals)
    token = UtxoToken.create(fiat_amount, recipient, ledger.height)
    nxt = mint_token(ledger, token)
    ev = _seal(MintEvent(trail.next_id, "mint", fiat_amount, fiat_amount, tuple(approvals),
                         ledger.height, (token.token_id,), trail.head))
    trail.append(ev)
    return nxt, ev


def redeem(config: OracleConfig, ledger: LedgerState, token_ids: Sequence[HashDigest],
           approvals: Sequence[Approval], trail: AuditTrail) -> tuple[LedgerState, MintEvent]:
    token_ids = tuple(token_ids)
    if not token_ids:
        raise DomainError("nothing to redeem")
    _require_threshold(config, redeem_message(trail, token_ids), approvals)
    nxt = burn_tokens(ledger, token_ids)
    amount = ledger.total_supply - nxt.total_supply
    ev = _seal(MintEvent(trail.next_id, "redeem", amount, -amount, tuple(approvals),
                         ledger.height, token_ids, trail.head))
    trail.append(ev)
    return nxt, ev


class Oracle:
    """Convenience holder for a config, its signer keys and the audit trail."""

    def __init__(self, signer_keys: Sequence[KeyPair], threshold: int):
        self.keys = list(signer_keys)
        self.config = OracleConfig(tuple(k.public_key for k in self.keys), threshold,
                                   self.keys[0].profile)
        self.trail = AuditTrail()

    @classmethod
    def from_seed(cls, seed: bytes, signers: int = 3, threshold: int = 2) -> Oracle:
        return cls([crypto.keypair_from_seed(encode(seed, i)) for i in range(signers)], threshold)

    def deposit(self, ledger: LedgerState, amount: int, recipient: KeyPair) -> tuple[LedgerState, MintEvent]:
        msg = mint_message(self.trail, amount, recipient.public_key)
        approvals = [approve(k, msg) for k in self.keys[: self.config.threshold]]
        return mint(self.config, ledger, amount, approvals, recipient, self.trail)

    def withdraw(self, ledger: LedgerState, token_ids: Sequence[HashDigest]) -> tuple[LedgerState, MintEvent]:
        msg = redeem_message(self.trail, token_ids)
        approvals = [approve(k, msg) for k in self.keys[: self.config.threshold]]
        return redeem(self.config, ledger, token_ids, approvals, self.trail)
