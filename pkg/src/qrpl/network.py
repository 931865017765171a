"""Sharded network primitives: beacon, shard assignment, blocks and cross-shard swaps.

Time is virtual and measured in integer microseconds.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import crypto
from .consensus import ConsensusParams, Validator, select_proposer, selection_input
from .crypto import HashDigest, KeyPair, ProofArtifact, StatementDescriptor, VrfOutput
from .encoding import encode
from .errors import ConfigurationError, DomainError, ProtocolViolation, StaleSwapError
from .ledger import (LedgerState, Transaction, UtxoToken, Verdict, Wallet, advance,
                     apply_transaction, lock_token, refund_locked, release_locked,
                     mint_token, validate_transaction)

log = logging.getLogger(__name__)

US = 1_000_000
KB = 1024


def seconds_to_us(s: float) -> int:
    return int(round(s * US))


@dataclass(frozen=True)
class NetworkConfig:
    shard_count: int = 256
    block_time_s: float = 10.0
    propagation_delay_s: float = 0.3
    vote_delay_s: float = 0.3
    cross_shard_delay_s: float = 0.7
    swap_timeout_s: float = 5.0
    tx_per_block: int = 20
    block_size_limit_kb: int = 4096
    loss_probability: float = 0.0
    jitter_fraction: float = 0.0

    def __post_init__(self):
        if not 10 <= self.block_time_s <= 20:
            raise ConfigurationError("block_time_s must lie in [10, 20]")
        if self.shard_count < 1 or self.tx_per_block < 0 or self.block_size_limit_kb <= 0:
            raise ConfigurationError("shard_count, tx_per_block and block size must be positive")
        for name in ("propagation_delay_s", "vote_delay_s", "cross_shard_delay_s", "swap_timeout_s"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if not 0 <= self.loss_probability <= 1 or not 0 <= self.jitter_fraction < 1:
            raise ConfigurationError("loss_probability in [0,1], jitter_fraction in [0,1)")

    @property
    def block_time_us(self) -> int:
        return seconds_to_us(self.block_time_s)

    @property
    def block_size_limit_bytes(self) -> int:
        return self.block_size_limit_kb * KB


# -- beacon ----------------------------------------------------------------

@dataclass(frozen=True)
class BeaconChain:
    """Deterministic stand-in for a public randomness beacon."""
    round: int
    value: HashDigest

    @classmethod
    def genesis(cls, seed: int | bytes) -> BeaconChain:
        return cls(0, crypto.hash_bytes(encode(b"qrpl/beacon-genesis", seed)))


def beacon_next(chain: BeaconChain) -> BeaconChain:
    return BeaconChain(chain.round + 1, crypto.hash_bytes(encode(chain.value.bytes, chain.round)))


def beacon_at(seed: int | bytes, round: int) -> BeaconChain:
    chain = BeaconChain.genesis(seed)
    for _ in range(round):
        chain = beacon_next(chain)
    return chain


# -- shard assignment ------------------------------------------------------

@dataclass(frozen=True)
class ShardAssignment:
    epoch: int
    shard_count: int
    mapping: dict[str, int]

    def members(self, shard: int) -> list[str]:
        return sorted(v for v, s in self.mapping.items() if s == shard)

    def sizes(self) -> list[int]:
        counts = [0] * self.shard_count
        for s in self.mapping.values():
            counts[s] += 1
        return counts


def assign_validators(validator_ids: Sequence[str], beacon_value: HashDigest, epoch: int,
                      shard_count: int) -> ShardAssignment:
    """Beacon-seeded uniform shuffle dealt round-robin into ``shard_count`` groups."""
    ids = sorted(validator_ids)
    if len(ids) < shard_count:
        raise ConfigurationError(f"{len(ids)} validators cannot fill {shard_count} shards")
    seed = int.from_bytes(crypto.hash_bytes(encode(b"qrpl/assign", beacon_value.bytes, epoch)).bytes, "big")
    perm = np.random.default_rng(seed).permutation(len(ids))
    return ShardAssignment(epoch, shard_count, {ids[p]: i % shard_count for i, p in enumerate(perm)})


# -- blocks ----------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    shard: int
    height: int
    round: int
    proposer: str
    vrf_output: VrfOutput
    txs: tuple[Transaction, ...]
    prev_hash: HashDigest
    time_us: int
    block_hash: HashDigest

    @staticmethod
    def compute_hash(shard, height, round, proposer, vrf_output, txs, prev_hash, time_us) -> HashDigest:
        return crypto.hash_bytes(encode(b"qrpl/block", shard, height, round, proposer,
                                        vrf_output.value.bytes, [t.tx_hash.bytes for t in txs],
                                        prev_hash.bytes, time_us))

    @property
    def byte_size(self) -> int:
        return sum(t.wire_size() for t in self.txs)


@dataclass
class ShardState:
    shard_id: int
    ledger: LedgerState = field(default_factory=LedgerState)
    height: int = 0
    prev_hash: HashDigest = field(default_factory=lambda: HashDigest(bytes(32)))


@dataclass(frozen=True)
class BlockResult:
    block: Block
    shard: ShardState
    leftover: list[Transaction]
    rejected: list[tuple[Transaction, Verdict]]


def block_budget(config: NetworkConfig) -> int:
    return config.tx_per_block


def produce_block(shard: ShardState, pending: Sequence[Transaction], config: NetworkConfig,
                  proposer: Validator, committee: Sequence[Validator], beacon_value: HashDigest,
                  round: int, time_us: int, params: ConsensusParams = ConsensusParams()) -> BlockResult:
    """Build and apply the next block of ``shard``.

    Takes transactions from ``pending`` in order while both the count budget
    and the byte budget allow. Invalid transactions are dropped and reported.
    The block height advances even when nothing is included.
    """
    expected = select_proposer(committee, beacon_value, round, params)
    if proposer.id != expected:
        raise ProtocolViolation(f"{proposer.id} is not the selected proposer ({expected})")
    ledger = shard.ledger
    included, rejected, leftover = [], [], []
    used = 0
    for tx in pending:
        if len(included) >= config.tx_per_block:
            leftover.append(tx)
            continue
        verdict = validate_transaction(ledger, tx)
        if not verdict.ok:
            rejected.append((tx, verdict.category))
            continue
        size = tx.wire_size()
        if used + size > config.block_size_limit_bytes:
            leftover.append(tx)
            continue
        ledger = apply_transaction(ledger, tx)
        included.append(tx)
        used += size
    ledger = advance(ledger)
    vrf = crypto.vrf_eval(proposer.keypair, selection_input(beacon_value, round))
    height = shard.height + 1
    bh = Block.compute_hash(shard.shard_id, height, round, proposer.id, vrf, included,
                            shard.prev_hash, time_us)
    block = Block(shard.shard_id, height, round, proposer.id, vrf, tuple(included),
                  shard.prev_hash, time_us, bh)
    return BlockResult(block, ShardState(shard.shard_id, ledger, height, bh), leftover, rejected)


# -- cross-shard swaps -----------------------------------------------------

class SwapState(enum.Enum):
    INIT = "Init"
    LOCKED_AT_SOURCE = "LockedAtSource"
    PROOF_RELAYED = "ProofRelayed"
    UNLOCKED_AT_TARGET = "UnlockedAtTarget"
    REFUNDED = "Refunded"


TERMINAL = {SwapState.UNLOCKED_AT_TARGET, SwapState.REFUNDED}


@dataclass(frozen=True)
class CrossShardSwap:
    swap_id: HashDigest
    source: int
    target: int
    locked_token: UtxoToken
    target_token: UtxoToken  # minted on the target when the swap completes
    recipient_pk: bytes
    state: SwapState
    deadline_us: int
    initiated_us: int
    proof: ProofArtifact
    history: tuple[SwapState, ...] = ()
    finished_us: int | None = None

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL

    def _to(self, state: SwapState, now_us: int | None = None) -> CrossShardSwap:
        return replace(self, state=state, history=self.history + (state,),
                       finished_us=now_us if state in TERMINAL else self.finished_us)


def swap_statement(swap_id: HashDigest, locked: UtxoToken, target_token: UtxoToken,
                   target: int) -> StatementDescriptor:
    def predicate(owner_key: KeyPair) -> bool:
        return owner_key.public_key == locked.owner_epk and locked.value == target_token.value

    return StatementDescriptor("swap", (swap_id.bytes, locked.token_id.bytes, locked.value,
                                        target_token.token_id.bytes, target), predicate)


def swap_initiate(source_ledger: LedgerState, source: int, target: int, token_id: HashDigest,
                  sender: Wallet, recipient: KeyPair, now_us: int,
                  config: NetworkConfig) -> tuple[CrossShardSwap, LedgerState]:
    """Lock a token on the source shard and prove the lock for the target.

    ``recipient`` is a one-time key supplied by the payee; the target token
    is committed to it up front so the target shard only mints what was proven.
    """
    if source == target:
        raise DomainError("source and target shard must differ")
    tok = source_ledger.unspent.get(token_id)
    owner = sender.keys.get(tok.owner_epk) if tok is not None else None
    locked_ledger = lock_token(source_ledger, token_id)  # raises for spent/unknown
    if owner is None:
        raise ProtocolViolation("sender does not own the token")
    swap_id = crypto.hash_bytes(encode(b"qrpl/swap", source, target, token_id.bytes, recipient.public_key))
    target_token = UtxoToken.create(tok.value, recipient, tok.created_at)
    proof = crypto.prove(swap_statement(swap_id, tok, target_token, target), owner)
    swap = CrossShardSwap(swap_id, source, target, tok, target_token, recipient.public_key,
                          SwapState.INIT, now_us + seconds_to_us(config.swap_timeout_s), now_us,
                          proof, (SwapState.INIT,))
    return swap._to(SwapState.LOCKED_AT_SOURCE), locked_ledger


def swap_complete(swap: CrossShardSwap, relay_proof: ProofArtifact, source_ledger: LedgerState,
                  target_ledger: LedgerState, now_us: int) -> tuple[CrossShardSwap, LedgerState, LedgerState]:
    """Verify the relayed proof, mint on the target and burn the lock on the source."""
    if swap.state is SwapState.REFUNDED or (not swap.terminal and now_us >= swap.deadline_us):
        raise StaleSwapError(f"swap {swap.swap_id.hex()[:12]} timed out")
    if swap.state is not SwapState.LOCKED_AT_SOURCE:
        raise ProtocolViolation(f"cannot complete swap in state {swap.state.value}")
    stmt = swap_statement(swap.swap_id, swap.locked_token, swap.target_token, swap.target)
    if not crypto.verify_proof(stmt, relay_proof):
        raise ProtocolViolation("relayed swap proof does not verify")
    relayed = swap._to(SwapState.PROOF_RELAYED)
    target_ledger = mint_token(target_ledger, swap.target_token)
    source_ledger = release_locked(source_ledger, swap.locked_token.token_id)
    return relayed._to(SwapState.UNLOCKED_AT_TARGET, now_us), source_ledger, target_ledger


def swap_timeout(swap: CrossShardSwap, source_ledger: LedgerState,
                 now_us: int) -> tuple[CrossShardSwap, LedgerState]:
    """Refund a swap whose deadline has passed; otherwise a no-op."""
    if swap.terminal or now_us < swap.deadline_us:
        return swap, source_ledger
    return swap._to(SwapState.REFUNDED, now_us), refund_locked(source_ledger, swap.locked_token.token_id)
