"""Offline peer-to-peer vouchers, NFC/QR framing and reconciliation.

A voucher carries a complete signed and proven transaction plus the input
tokens it spends, so the receiving device can check it without the ledger.
Received value, and the sender's own change, cannot be spent again until
the device has synchronised.
"""
from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

from . import crypto
from .crypto import HashDigest, KeyPair
from .encoding import decode, decode_int, encode
from .errors import (ChecksumError, DomainError, IncompletePayloadError, InsufficientFundsError,
                     ProtocolViolation, TierLimitError)
from .ledger import (LedgerState, Transaction, UtxoToken, Verdict, Wallet, apply_transaction,
                     build_transfer, default_fee, validate_transaction)

MINOR_UNITS = 100  # minor units per major currency unit
BASE_LIMIT = 300 * MINOR_UNITS
QR_FRAME_BYTES = 2_900
QR_HEADER = struct.Struct(">HH")


@dataclass(frozen=True)
class KycTier:
    level: int
    per_tx_limit: int

    def __post_init__(self):
        if self.level < 0 or self.per_tx_limit < 0:
            raise DomainError("tier level and limit must be non-negative")


def tier_table(levels: int = 4, base: int = BASE_LIMIT, step: int = 10) -> dict[int, KycTier]:
    """Level 0 allows ``base``; each further level multiplies the limit by ``step``."""
    return {n: KycTier(n, base * step ** n) for n in range(levels)}


TIERS = tier_table()


@dataclass(frozen=True)
class OfflineVoucher:
    voucher_id: HashDigest
    transaction: Transaction
    tier: KycTier
    created_at: int
    amount: int
    input_tokens: tuple[UtxoToken, ...]
    recipient_note: KeyPair  # stands in for the encrypted key handed to the payee

    @staticmethod
    def body(tx, tier, created_at, amount, input_tokens, note) -> bytes:
        return encode(b"qrpl/voucher-v1", tx.to_bytes(), tier.level, tier.per_tx_limit, created_at,
                      amount, [t.to_bytes() for t in input_tokens],
                      encode(note.secret_key, note.public_key, note.profile.name))

    @classmethod
    def create(cls, tx, tier, created_at, amount, input_tokens, note) -> OfflineVoucher:
        vid = crypto.hash_bytes(cls.body(tx, tier, created_at, amount, input_tokens, note))
        return cls(vid, tx, tier, created_at, amount, tuple(input_tokens), note)

    def to_bytes(self) -> bytes:
        return encode(self.body(self.transaction, self.tier, self.created_at, self.amount,
                                self.input_tokens, self.recipient_note), self.voucher_id.bytes)

    @classmethod
    def from_bytes(cls, data: bytes) -> OfflineVoucher:
        body, vid = decode(data)
        magic, tx, level, limit, created, amount, inputs, note = decode(body)
        if magic != b"qrpl/voucher-v1":
            raise ValueError("not a voucher")
        sk, pk, prof = decode(note)
        v = cls(HashDigest(vid), Transaction.from_bytes(tx), KycTier(decode_int(level), decode_int(limit)),
                decode_int(created), decode_int(amount),
                tuple(UtxoToken.from_bytes(b) for b in decode(inputs)),
                KeyPair(sk, pk, crypto.PROFILES[prof.decode()]))
        if crypto.hash_bytes(body) != v.voucher_id:
            raise ChecksumError("voucher id does not match contents")
        return v


def check_voucher(voucher: OfflineVoucher, tiers: dict[int, KycTier] = TIERS) -> Verdict | str:
    """On-device validation without ledger access. Returns Verdict.ACCEPT or a reason."""
    if voucher.tier != tiers.get(voucher.tier.level):
        return "UnknownTier"
    if voucher.amount <= 0 or voucher.amount > voucher.tier.per_tx_limit:
        return "TierLimit"
    tx = voucher.transaction
    if crypto.hash_bytes(OfflineVoucher.body(tx, voucher.tier, voucher.created_at, voucher.amount,
                                             voucher.input_tokens, voucher.recipient_note)) != voucher.voucher_id:
        return Verdict.MALFORMED
    if tuple(t.token_id for t in voucher.input_tokens) != tx.inputs or not all(
            t.well_formed() for t in voucher.input_tokens):
        return Verdict.MALFORMED
    if tx.outputs[0].value != voucher.amount or tx.outputs[0].owner_epk != voucher.recipient_note.public_key:
        return Verdict.MALFORMED
    local = LedgerState(unspent={t.token_id: t for t in voucher.input_tokens})
    return validate_transaction(local, tx).category


# -- devices ---------------------------------------------------------------

@dataclass(frozen=True)
class DeviceState:
    device_id: str
    identity: KeyPair
    keys: dict[bytes, KeyPair] = field(default_factory=dict)
    held: dict[HashDigest, UtxoToken] = field(default_factory=dict)
    pending_spent: dict[HashDigest, UtxoToken] = field(default_factory=dict)
    outbox: tuple[OfflineVoucher, ...] = ()
    inbox: tuple[OfflineVoucher, ...] = ()
    synced_height: int = 0
    clock: int = 0

    @classmethod
    def new(cls, device_id: str, seed: bytes | None = None) -> DeviceState:
        kp = crypto.keypair_from_seed(seed or device_id.encode())
        return cls(device_id, kp, {kp.public_key: kp})

    @property
    def public_key(self) -> bytes:
        return self.identity.public_key

    def wallet(self) -> Wallet:
        w = Wallet(self.identity)
        w.receive(*self.keys.values())
        return w

    def balance(self) -> int:
        return sum(t.value for t in self.held.values())

    def with_key(self, kp: KeyPair) -> DeviceState:
        return replace(self, keys={**self.keys, kp.public_key: kp})

    def sync(self, ledger: LedgerState) -> DeviceState:
        """Replace local holdings with the ledger's view of this device's tokens."""
        held = {tid: t for tid, t in ledger.unspent.items() if t.owner_epk in self.keys}
        return replace(self, held=held, pending_spent={}, outbox=(), inbox=(),
                       synced_height=ledger.height)


def offline_transfer(sender: DeviceState, recipient: DeviceState, amount: int,
                     tier: KycTier = TIERS[0], fee: int | None = None,
                     tiers: dict[int, KycTier] = TIERS) -> tuple[DeviceState, DeviceState, OfflineVoucher]:
    if amount <= 0:
        raise DomainError("offline transfer amount must be positive")
    if amount > tier.per_tx_limit:
        raise TierLimitError(f"{amount} exceeds tier {tier.level} limit {tier.per_tx_limit}")
    fee = default_fee(amount) if fee is None else fee
    local = LedgerState(unspent=dict(sender.held), height=sender.synced_height)
    wallet = sender.wallet()
    coins = wallet.select(local, amount + fee)
    if not coins:
        raise InsufficientFundsError(f"device {sender.device_id} holds {sender.balance()}, needs {amount + fee}")
    change = sum(c.value for c in coins) - amount - fee
    recipients, values = [recipient.public_key], [amount]
    if change:
        recipients.append(sender.public_key)
        values.append(change)
    tr = build_transfer(local, wallet, recipients, [c.token_id for c in coins], values, fee)
    voucher = OfflineVoucher.create(tr.tx, tier, sender.clock, amount, coins, tr.notes[0])
    verdict = check_voucher(voucher, tiers)
    if verdict is not Verdict.ACCEPT:
        raise ProtocolViolation(f"recipient rejected voucher: {verdict}")
    spent = {c.token_id: c for c in coins}
    new_sender = replace(
        sender,
        keys={**sender.keys, **{n.public_key: n for n in tr.notes[1:]}},
        held={k: v for k, v in sender.held.items() if k not in spent},
        pending_spent={**sender.pending_spent, **spent},
        outbox=sender.outbox + (voucher,),
        clock=sender.clock + 1,
    )
    new_recipient = replace(recipient.with_key(tr.notes[0]), inbox=recipient.inbox + (voucher,),
                            clock=max(recipient.clock, sender.clock) + 1)
    return new_sender, new_recipient, voucher


# -- transport -------------------------------------------------------------

class Transport(enum.Enum):
    NFC = "nfc"
    QR = "qr"


def _payload(voucher: OfflineVoucher) -> bytes:
    body = voucher.to_bytes()
    return body + struct.pack(">I", zlib.crc32(body))


def encode_voucher(voucher: OfflineVoucher, transport: Transport = Transport.NFC) -> list[bytes]:
    """Frames for ``transport``: one raw frame for NFC, headed chunks for QR."""
    payload = _payload(voucher)
    if transport is Transport.NFC:
        return [payload]
    room = QR_FRAME_BYTES - QR_HEADER.size
    chunks = [payload[i:i + room] for i in range(0, len(payload), room)]
    if len(chunks) > 0xFFFF:
        raise DomainError("payload too large for QR framing")
    return [QR_HEADER.pack(i, len(chunks)) + c for i, c in enumerate(chunks)]


def decode_voucher(frames: Sequence[bytes] | bytes, transport: Transport = Transport.NFC) -> OfflineVoucher:
    if isinstance(frames, (bytes, bytearray)):
        frames = [bytes(frames)]
    if transport is Transport.NFC:
        if len(frames) != 1:
            raise IncompletePayloadError("NFC payload must be a single frame")
        payload = frames[0]
    else:
        parts: dict[int, bytes] = {}
        total = None
        for fr in frames:
            if len(fr) < QR_HEADER.size or len(fr) > QR_FRAME_BYTES:
                raise ChecksumError("bad QR frame size")
            idx, tot = QR_HEADER.unpack_from(fr)
            if total is None:
                total = tot
            elif tot != total:
                raise ChecksumError("inconsistent frame totals")
            parts[idx] = fr[QR_HEADER.size:]
        if total is None or any(i not in parts for i in range(total)):
            raise IncompletePayloadError(f"have {len(parts)} of {total} frames")
        payload = b"".join(parts[i] for i in range(total))
    if len(payload) < 4:
        raise IncompletePayloadError("payload too short")
    body, (crc,) = payload[:-4], struct.unpack(">I", payload[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError("voucher checksum mismatch")
    try:
        return OfflineVoucher.from_bytes(body)
    except (ValueError, KeyError) as e:
        raise ChecksumError(f"undecodable voucher: {e}") from e


# -- reconciliation --------------------------------------------------------

@dataclass
class ReconcileReport:
    applied: list[HashDigest] = field(default_factory=list)
    conflicts: list[tuple[HashDigest, str]] = field(default_factory=list)
    already_settled: list[HashDigest] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.conflicts


def reconcile(device: DeviceState, ledger: LedgerState,
              tiers: dict[int, KycTier] = TIERS) -> tuple[DeviceState, LedgerState, ReconcileReport]:
    """Submit the device's pending vouchers to the ledger in creation order.

    The first valid spend of a token wins; later conflicting vouchers are
    reported (typically as DoubleSpend). The device then adopts ledger truth.
    """
    report = ReconcileReport()
    seen = set()
    pending = sorted(device.outbox + device.inbox, key=lambda v: (v.created_at, v.voucher_id))
    for v in pending:
        if v.voucher_id in seen:
            continue
        seen.add(v.voucher_id)
        if v.transaction.tx_hash in ledger.applied:
            report.already_settled.append(v.voucher_id)
            continue
        local = check_voucher(v, tiers)
        if local is not Verdict.ACCEPT:
            report.conflicts.append((v.voucher_id, local.value if isinstance(local, Verdict) else local))
            continue
        verdict = validate_transaction(ledger, v.transaction)
        if verdict.ok:
            ledger = apply_transaction(ledger, v.transaction)
            report.applied.append(v.voucher_id)
        else:
            report.conflicts.append((v.voucher_id, verdict.category.value))
    return device.sync(ledger), ledger, report
