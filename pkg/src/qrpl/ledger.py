"""UTXO ledger: transaction construction, validation, application and pruning.

Values are integers in minor currency units. Fees are burned here; crediting
validators is left to the consensus layer.
"""
from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from . import crypto
from .crypto import Commitment, HashDigest, KeyPair, ProofArtifact, StatementDescriptor
from .encoding import decode, decode_int, encode
from .errors import (DomainError, DoubleSpendError, ImbalanceError,
                     InsufficientFundsError, ProtocolViolation, UnknownInputError)

log = logging.getLogger(__name__)

FEE_RATE = Fraction(1, 10_000)
SECONDS_PER_YEAR = 365 * 24 * 3600
OTHER_TX_BYTES = 1024


def default_fee(amount: int, rate: Fraction = FEE_RATE) -> int:
    """Nominal fee on a transfer amount, rounded down to whole minor units."""
    if amount < 0:
        raise DomainError("amount must be non-negative")
    return int(amount * rate)


def blinding_for(keypair: KeyPair) -> bytes:
    return crypto.hash_bytes(encode(b"qrpl/blind", keypair.secret_key)).bytes


@dataclass(frozen=True)
class UtxoToken:
    token_id: HashDigest
    commitment: Commitment
    value: int
    owner_epk: bytes
    created_at: int

    @staticmethod
    def compute_id(commitment: Commitment, value: int, owner_epk: bytes, created_at: int) -> HashDigest:
        return crypto.hash_bytes(encode(b"qrpl/token", commitment.digest.bytes, value, owner_epk, created_at))

    @classmethod
    def create(cls, value: int, owner: KeyPair, created_at: int) -> UtxoToken:
        if value < 0:
            raise DomainError("token value must be non-negative")
        c = crypto.commit(value, blinding_for(owner))
        return cls(cls.compute_id(c, value, owner.public_key, created_at), c, value,
                   owner.public_key, created_at)

    def well_formed(self) -> bool:
        return self.value >= 0 and self.token_id == self.compute_id(
            self.commitment, self.value, self.owner_epk, self.created_at)

    def to_bytes(self) -> bytes:
        return encode(self.token_id.bytes, self.commitment.digest.bytes, self.value,
                      self.owner_epk, self.created_at)

    @classmethod
    def from_bytes(cls, data: bytes) -> UtxoToken:
        tid, cd, value, epk, created = decode(data)
        return cls(HashDigest(tid), Commitment(HashDigest(cd)), decode_int(value), epk,
                   decode_int(created))

    def to_json(self) -> dict:
        return {"token_id": self.token_id.hex(), "commitment": self.commitment.digest.hex(),
                "value": self.value, "owner_epk": self.owner_epk.hex(), "created_at": self.created_at}


def compute_tx_hash(inputs: Sequence[HashDigest], outputs: Sequence[UtxoToken], fee: int) -> HashDigest:
    return crypto.hash_bytes(encode(b"qrpl/tx", [i.bytes for i in inputs],
                                    [o.to_bytes() for o in outputs], fee))


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[HashDigest, ...]
    outputs: tuple[UtxoToken, ...]
    fee: int
    zk_proof: ProofArtifact
    signature: bytes
    tx_hash: HashDigest
    signer_pk: bytes
    profile: crypto.SchemeProfile = field(default=crypto.DEFAULT_PROFILE, compare=False)

    @property
    def output_total(self) -> int:
        return sum(o.value for o in self.outputs)

    def wire_size(self) -> int:
        """Simulated on-wire bytes: signature, proof and a fixed remainder."""
        return len(self.signature) + self.zk_proof.simulated_size_bytes + OTHER_TX_BYTES

    def to_bytes(self) -> bytes:
        return encode([i.bytes for i in self.inputs], [o.to_bytes() for o in self.outputs],
                      self.fee, self.zk_proof.to_bytes(), self.signature, self.tx_hash.bytes,
                      self.signer_pk, self.profile.name)

    @classmethod
    def from_bytes(cls, data: bytes) -> Transaction:
        ins, outs, fee, proof, sig, txh, spk, prof = decode(data)
        return cls(tuple(HashDigest(i) for i in decode(ins)),
                   tuple(UtxoToken.from_bytes(o) for o in decode(outs)),
                   decode_int(fee), ProofArtifact.from_bytes(proof), sig, HashDigest(txh), spk,
                   crypto.PROFILES[prof.decode()])


@dataclass(frozen=True)
class TransferWitness:
    input_tokens: tuple[UtxoToken, ...]
    input_keys: tuple[KeyPair, ...]
    output_keys: tuple[KeyPair, ...]
    fee: int


def transfer_statement(tx_hash: HashDigest, signer_pk: bytes, inputs: Sequence[HashDigest],
                       outputs: Sequence[UtxoToken], fee: int) -> StatementDescriptor:
    input_ids = tuple(inputs)

    def predicate(w: TransferWitness) -> bool:
        if tuple(t.token_id for t in w.input_tokens) != input_ids:
            return False
        if len(set(input_ids)) != len(input_ids):
            return False
        for tok, key in zip(w.input_tokens, w.input_keys, strict=True):
            if key.public_key != tok.owner_epk:
                return False
            if not crypto.open_commitment(tok.commitment, tok.value, blinding_for(key)):
                return False
        for out, key in zip(outputs, w.output_keys, strict=True):
            if out.value < 0 or not crypto.open_commitment(out.commitment, out.value, blinding_for(key)):
                return False
        return sum(t.value for t in w.input_tokens) == sum(o.value for o in outputs) + w.fee

    return StatementDescriptor(
        "transfer",
        (tx_hash.bytes, signer_pk, [i.bytes for i in inputs],
         [o.commitment.digest.bytes for o in outputs]),
        predicate,
    )


def statement_for(tx: Transaction) -> StatementDescriptor:
    return transfer_statement(tx.tx_hash, tx.signer_pk, tx.inputs, tx.outputs, tx.fee)


# -- ledger state ----------------------------------------------------------

@dataclass
class LedgerState:
    """Ledger snapshot. Operations return successors and never mutate inputs."""
    unspent: dict[HashDigest, UtxoToken] = field(default_factory=dict)
    spent_log: dict[HashDigest, int] = field(default_factory=dict)
    locked: dict[HashDigest, UtxoToken] = field(default_factory=dict)
    height: int = 0
    total_supply: int = 0
    fees_burned: int = 0
    applied: dict[HashDigest, int] = field(default_factory=dict)

    def copy(self) -> LedgerState:
        return LedgerState(dict(self.unspent), dict(self.spent_log), dict(self.locked),
                           self.height, self.total_supply, self.fees_burned, dict(self.applied))

    def unspent_value(self) -> int:
        return sum(t.value for t in self.unspent.values())

    def locked_value(self) -> int:
        return sum(t.value for t in self.locked.values())

    def audit(self) -> None:
        """Raise AssertionError when the state's bookkeeping is inconsistent."""
        if self.unspent.keys() & self.spent_log.keys():
            raise AssertionError("token both unspent and spent")
        if self.locked.keys() & (self.unspent.keys() | self.spent_log.keys()):
            raise AssertionError("locked token also unspent or spent")
        if self.total_supply != self.unspent_value() + self.locked_value():
            raise AssertionError(
                f"supply {self.total_supply} != unspent {self.unspent_value()} + locked {self.locked_value()}")

    def to_bytes(self) -> bytes:
        return encode(
            b"qrpl/ledger-v1", self.height, self.total_supply, self.fees_burned,
            [t.to_bytes() for _, t in sorted(self.unspent.items())],
            [encode(k.bytes, h) for k, h in sorted(self.spent_log.items())],
            [t.to_bytes() for _, t in sorted(self.locked.items())],
            [encode(k.bytes, h) for k, h in sorted(self.applied.items())],
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> LedgerState:
        magic, height, supply, burned, unspent, spent, locked, applied = decode(data)
        if magic != b"qrpl/ledger-v1":
            raise ValueError("not a ledger snapshot")

        def pairs(blob):
            out = {}
            for item in decode(blob):
                k, h = decode(item)
                out[HashDigest(k)] = decode_int(h)
            return out

        toks = [UtxoToken.from_bytes(b) for b in decode(unspent)]
        lock = [UtxoToken.from_bytes(b) for b in decode(locked)]
        return cls({t.token_id: t for t in toks}, pairs(spent), {t.token_id: t for t in lock},
                   decode_int(height), decode_int(supply), decode_int(burned), pairs(applied))

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "total_supply": self.total_supply,
            "fees_burned": self.fees_burned,
            "unspent": [t.to_json() for _, t in sorted(self.unspent.items())],
            "spent_log": {k.hex(): h for k, h in sorted(self.spent_log.items())},
            "locked": [t.to_json() for _, t in sorted(self.locked.items())],
            "applied": {k.hex(): h for k, h in sorted(self.applied.items())},
        }


def dump_json(state: LedgerState, path) -> None:
    with open(path, "w") as f:
        json.dump(state.to_json(), f, indent=2, sort_keys=True)


def advance(state: LedgerState, blocks: int = 1) -> LedgerState:
    return replace(state.copy(), height=state.height + blocks)


# -- wallets ---------------------------------------------------------------

class Wallet:
    """Client-side key store: an identity key plus received one-time keys."""

    def __init__(self, identity: KeyPair):
        self.identity = identity
        self.keys: dict[bytes, KeyPair] = {identity.public_key: identity}

    @classmethod
    def from_seed(cls, seed: bytes, profile: crypto.SchemeProfile = crypto.DEFAULT_PROFILE) -> Wallet:
        return cls(crypto.keypair_from_seed(seed, profile))

    @property
    def public_key(self) -> bytes:
        return self.identity.public_key

    def receive(self, *notes: KeyPair) -> None:
        for kp in notes:
            self.keys[kp.public_key] = kp

    def fresh_key(self, nonce: bytes) -> KeyPair:
        """A new one-time key owned by this wallet (for deposits and swaps)."""
        kp = crypto.derive_ephemeral(self.identity.secret_key, self.identity.public_key,
                                     encode(b"qrpl/fresh", nonce), self.identity.profile)
        self.receive(kp)
        return kp

    def owns(self, token: UtxoToken) -> bool:
        return token.owner_epk in self.keys

    def tokens(self, state: LedgerState) -> list[UtxoToken]:
        return sorted((t for t in state.unspent.values() if self.owns(t)),
                      key=lambda t: t.token_id)

    def balance(self, state: LedgerState) -> int:
        return sum(t.value for t in self.tokens(state))

    def select(self, state: LedgerState, amount: int, exclude=frozenset()) -> list[UtxoToken]:
        """Greedy coin selection, largest tokens first; ``exclude`` holds reserved ids."""
        chosen, total = [], 0
        candidates = (t for t in self.tokens(state) if t.token_id not in exclude)
        for tok in sorted(candidates, key=lambda t: (-t.value, t.token_id)):
            if total >= amount and chosen:
                break
            chosen.append(tok)
            total += tok.value
        return chosen if total >= amount and chosen else []


@dataclass(frozen=True)
class Transfer:
    tx: Transaction
    notes: tuple[KeyPair, ...]  # one-time keys for each output, delivered to recipients


def build_transfer(state: LedgerState, sender: Wallet, recipient_pk: bytes | Sequence[bytes],
                   input_ids: Sequence[HashDigest], output_values: Sequence[int], fee: int,
                   *, adversarial: bool = False, rng=None) -> Transfer:
    if fee < 0:
        raise DomainError("fee must be non-negative")
    if not input_ids or not output_values:
        raise DomainError("a transaction needs inputs and outputs")
    if any(v < 0 for v in output_values):
        raise DomainError("output values must be non-negative")
    recipients = ([recipient_pk] * len(output_values) if isinstance(recipient_pk, (bytes, bytearray))
                  else list(recipient_pk))
    if len(recipients) != len(output_values):
        raise DomainError("one recipient per output")

    tokens, keys = [], []
    for tid in input_ids:
        tok = state.unspent.get(tid)
        if tok is None:
            raise UnknownInputError(f"input {tid.hex()} is not unspent")
        kp = sender.keys.get(tok.owner_epk)
        if kp is None:
            raise UnknownInputError(f"input {tid.hex()} is not owned by sender")
        tokens.append(tok)
        keys.append(kp)

    in_total = sum(t.value for t in tokens)
    if in_total != sum(output_values) + fee and not adversarial:  # a malicious builder may try anyway
        raise ImbalanceError(f"{in_total} != {sum(output_values)} + {fee}")

    input_blob = encode([i.bytes for i in input_ids])
    out_keys = tuple(
        crypto.derive_ephemeral(keys[0].secret_key, rpk, encode(input_blob, n), keys[0].profile)
        for n, rpk in enumerate(recipients))
    outputs = tuple(UtxoToken.create(v, k, state.height) for v, k in zip(output_values, out_keys))
    tx_hash = compute_tx_hash(input_ids, outputs, fee)

    signer = crypto.derive_ephemeral(keys[0].secret_key, b"qrpl/signer", tx_hash.bytes, keys[0].profile)
    stmt = transfer_statement(tx_hash, signer.public_key, input_ids, outputs, fee)
    witness = TransferWitness(tuple(tokens), tuple(keys), out_keys, fee)
    proof = crypto.prove(stmt, witness, rng=rng, adversarial=adversarial)
    signature = crypto.sign(tx_hash.bytes, signer)
    tx = Transaction(tuple(input_ids), outputs, fee, proof, signature, tx_hash,
                     signer.public_key, signer.profile)
    return Transfer(tx, out_keys)


def create_transaction(state: LedgerState, sender: Wallet, recipient_pk, input_ids, output_values,
                       fee: int, **kw) -> Transaction:
    return build_transfer(state, sender, recipient_pk, input_ids, output_values, fee, **kw).tx


def pay(state: LedgerState, sender: Wallet, recipient_pk: bytes, amount: int,
        fee: int | None = None, exclude=frozenset(), **kw) -> Transfer:
    """Pay ``amount`` with automatic coin selection; change returns to the sender."""
    if amount <= 0:
        raise DomainError("amount must be positive")
    fee = default_fee(amount) if fee is None else fee
    coins = sender.select(state, amount + fee, exclude)
    if not coins:
        raise InsufficientFundsError(f"need {amount + fee}, have {sender.balance(state)}")
    change = sum(c.value for c in coins) - amount - fee
    recipients, values = [recipient_pk], [amount]
    if change:
        recipients.append(sender.public_key)
        values.append(change)
    return build_transfer(state, sender, recipients, [c.token_id for c in coins], values, fee, **kw)


# -- validation ------------------------------------------------------------

class Verdict(enum.Enum):
    ACCEPT = "Accept"
    DOUBLE_SPEND = "DoubleSpend"
    UNKNOWN_INPUT = "UnknownInput"
    IMBALANCE = "Imbalance"
    BAD_PROOF = "BadProof"
    BAD_SIGNATURE = "BadSignature"
    MALFORMED = "Malformed"


@dataclass(frozen=True)
class ValidationVerdict:
    category: Verdict
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.category is Verdict.ACCEPT

    def __str__(self):
        return self.category.value + (f": {self.detail}" if self.detail else "")


ACCEPT = ValidationVerdict(Verdict.ACCEPT)


def validate_transaction(state: LedgerState, tx: Transaction) -> ValidationVerdict:
    if not tx.inputs or not tx.outputs or tx.fee < 0:
        return ValidationVerdict(Verdict.MALFORMED, "empty inputs/outputs or negative fee")
    if len(set(tx.inputs)) != len(tx.inputs):
        return ValidationVerdict(Verdict.DOUBLE_SPEND, "input repeated within transaction")
    for tid in tx.inputs:
        if tid in state.unspent:
            continue
        if tid in state.spent_log or tid in state.locked:
            return ValidationVerdict(Verdict.DOUBLE_SPEND, tid.hex())
        return ValidationVerdict(Verdict.UNKNOWN_INPUT, tid.hex())
    for out in tx.outputs:
        if not out.well_formed():
            return ValidationVerdict(Verdict.MALFORMED, "output token id mismatch")
        if out.token_id in state.unspent or out.token_id in state.spent_log or out.token_id in state.locked:
            return ValidationVerdict(Verdict.MALFORMED, "output token id already exists")
    if len({o.token_id for o in tx.outputs}) != len(tx.outputs):
        return ValidationVerdict(Verdict.MALFORMED, "duplicate outputs")
    in_total = sum(state.unspent[t].value for t in tx.inputs)
    if in_total != tx.output_total + tx.fee:
        return ValidationVerdict(Verdict.IMBALANCE, f"{in_total} != {tx.output_total} + {tx.fee}")
    if compute_tx_hash(tx.inputs, tx.outputs, tx.fee) != tx.tx_hash:
        return ValidationVerdict(Verdict.BAD_SIGNATURE, "tx_hash does not match contents")
    if not crypto.verify_proof(statement_for(tx), tx.zk_proof):
        return ValidationVerdict(Verdict.BAD_PROOF)
    if not crypto.verify(tx.tx_hash.bytes, tx.signature, tx.signer_pk, tx.profile):
        return ValidationVerdict(Verdict.BAD_SIGNATURE)
    return ACCEPT


def apply_transaction(state: LedgerState, tx: Transaction) -> LedgerState:
    verdict = validate_transaction(state, tx)
    if not verdict.ok:
        raise ProtocolViolation(f"cannot apply transaction: {verdict}")
    nxt = state.copy()
    for tid in tx.inputs:
        del nxt.unspent[tid]
        nxt.spent_log[tid] = state.height
    for out in tx.outputs:
        nxt.unspent[out.token_id] = out
    nxt.total_supply -= tx.fee
    nxt.fees_burned += tx.fee
    nxt.applied[tx.tx_hash] = state.height
    return nxt


def apply_many(state: LedgerState, txs: Iterable[Transaction]) -> tuple[LedgerState, list[Transaction]]:
    """Apply every valid transaction in order, skipping the rest."""
    applied = []
    for tx in txs:
        if validate_transaction(state, tx).ok:
            state = apply_transaction(state, tx)
            applied.append(tx)
    return state, applied


# -- value entering/leaving outside transfers -----------------------------

def mint_token(state: LedgerState, token: UtxoToken) -> LedgerState:
    if not token.well_formed():
        raise DomainError("malformed token")
    if token.token_id in state.unspent or token.token_id in state.spent_log or token.token_id in state.locked:
        raise ProtocolViolation("token id already exists")
    nxt = state.copy()
    nxt.unspent[token.token_id] = token
    nxt.total_supply += token.value
    return nxt


def burn_tokens(state: LedgerState, token_ids: Sequence[HashDigest]) -> LedgerState:
    if len(set(token_ids)) != len(token_ids):
        raise DoubleSpendError("token listed twice")
    nxt = state.copy()
    for tid in token_ids:
        tok = nxt.unspent.pop(tid, None)
        if tok is None:
            if tid in state.spent_log or tid in state.locked:
                raise DoubleSpendError(tid.hex())
            raise UnknownInputError(tid.hex())
        nxt.spent_log[tid] = state.height
        nxt.total_supply -= tok.value
    return nxt


def lock_token(state: LedgerState, token_id: HashDigest) -> LedgerState:
    tok = state.unspent.get(token_id)
    if tok is None:
        if token_id in state.spent_log or token_id in state.locked:
            raise DoubleSpendError(token_id.hex())
        raise UnknownInputError(token_id.hex())
    nxt = state.copy()
    del nxt.unspent[token_id]
    nxt.locked[token_id] = tok
    return nxt


def release_locked(state: LedgerState, token_id: HashDigest) -> LedgerState:
    """Burn a locked token after its value has been minted elsewhere."""
    nxt = state.copy()
    tok = nxt.locked.pop(token_id)
    nxt.spent_log[token_id] = state.height
    nxt.total_supply -= tok.value
    return nxt


def refund_locked(state: LedgerState, token_id: HashDigest) -> LedgerState:
    nxt = state.copy()
    nxt.unspent[token_id] = nxt.locked.pop(token_id)
    return nxt


# -- pruning ---------------------------------------------------------------

@dataclass(frozen=True)
class PruningConfig:
    challenge_period_blocks: int = SECONDS_PER_YEAR // 10

    def __post_init__(self):
        if self.challenge_period_blocks <= 0:
            raise DomainError("challenge period must be positive")

    @classmethod
    def one_year(cls, block_time_s: float = 10.0) -> PruningConfig:
        return cls(int(SECONDS_PER_YEAR // block_time_s))


def prune(state: LedgerState, config: PruningConfig = PruningConfig()) -> LedgerState:
    nxt = state.copy()
    nxt.spent_log = {k: h for k, h in state.spent_log.items()
                     if state.height - h <= config.challenge_period_blocks}
    nxt.applied = {k: h for k, h in state.applied.items()
                   if state.height - h <= config.challenge_period_blocks}
    dropped = len(state.spent_log) - len(nxt.spent_log)
    if dropped:
        log.debug("pruned %d spent entries at height %d", dropped, state.height)
    return nxt
