"""Seeded discrete-event simulation of the sharded network.

The run is a pure function of ``(SimConfig, seed)``: all randomness comes from
one ``random.Random`` plus beacon-derived shuffles, and events are ordered by
``(time_us, sequence)``. Audits run after every event.
"""
from __future__ import annotations

import hashlib
import heapq
import json
import logging
import random
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from . import crypto
from .consensus import (ConsensusParams, SlashReason, Validator, accrue_activity,
                        adversary_ratios, prove_activity, select_proposer, slash)
from .encoding import encode
from .errors import InsufficientFundsError, StaleSwapError
from .issuance import Oracle
from .ledger import Transaction, Wallet, pay
from .network import (BeaconChain, CrossShardSwap, NetworkConfig, ShardState,
                      SwapState, assign_validators, beacon_next, produce_block, seconds_to_us,
                      swap_complete, swap_initiate, swap_timeout)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    network: NetworkConfig = field(default_factory=lambda: NetworkConfig(shard_count=4))
    consensus: ConsensusParams = field(default_factory=ConsensusParams)
    validators: int = 16
    blocks: int = 100
    users_per_shard: int = 6
    initial_balance: int = 1_000_000
    payments_per_block: int = 6
    swaps_per_block: int = 1
    replay_rate: float = 0.05  # chance per block of resubmitting an already-applied tx
    double_sign_rate: float = 0.01
    stake_range: tuple[int, int] = (1_000, 10_000)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["consensus"] = {k: str(v) for k, v in d["consensus"].items()}
        d["stake_range"] = list(self.stake_range)
        return d


@dataclass(frozen=True)
class Event:
    time_us: int
    shard: int
    kind: str
    payload_digest: str

    def to_json(self) -> str:
        return json.dumps({"time_us": self.time_us, "shard": self.shard, "kind": self.kind,
                           "payload_digest": self.payload_digest}, sort_keys=True)


@dataclass
class SimReport:
    config: dict
    seed: int
    events: list[Event]
    audits: dict[str, bool]
    stats: dict[str, Any]

    @property
    def passed(self) -> bool:
        return all(self.audits.values())

    def event_log(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def log_digest(self) -> str:
        return hashlib.sha3_256(self.event_log().encode()).hexdigest()

    def summary(self) -> dict:
        return {"config": self.config, "seed": self.seed, "audits": self.audits,
                "stats": self.stats, "event_count": len(self.events),
                "event_log_sha3": self.log_digest()}


class Simulator:
    def __init__(self, config: SimConfig = SimConfig(), seed: int = 0):
        self.config = config
        self.seed = seed
        self.net = config.network
        self.rng = random.Random(seed)
        self.beacon = BeaconChain.genesis(seed)
        self.events: list[Event] = []
        self._queue: list[tuple[int, int, str, Any]] = []
        self._seq = 0
        self.swaps: dict[crypto.HashDigest, CrossShardSwap] = {}
        self.swap_history: dict[crypto.HashDigest, list[SwapState]] = {}
        self.consumed: set[crypto.HashDigest] = set()
        self.stats: Counter = Counter()
        self.audit_ok = {"conservation": True, "ledger_bookkeeping": True, "swap_atomicity": True,
                         "no_double_consume": True, "block_interval": True}
        self.block_times: dict[int, list[int]] = {s: [] for s in range(self.net.shard_count)}
        self.slashings = []
        self.swap_latencies_us: list[int] = []
        self._setup()

    # -- setup -------------------------------------------------------------

    def _setup(self):
        cfg, n = self.config, self.net.shard_count
        self.oracle = Oracle.from_seed(encode(b"qrpl/oracle", self.seed))
        self.validators: dict[str, Validator] = {}
        lo, hi = cfg.stake_range
        for i in range(cfg.validators):
            vid = f"v{i:04d}"
            kp = crypto.keypair_from_seed(encode(b"qrpl/validator", self.seed, i))
            self.validators[vid] = Validator(vid, self.rng.randint(lo, hi), kp)
        self.shards = [ShardState(s) for s in range(n)]
        self.users: list[list[Wallet]] = [[] for _ in range(n)]
        self.wallet_owner: dict[int, str] = {}  # id(wallet) -> validator id
        for s in range(n):
            for u in range(cfg.users_per_shard):
                self.users[s].append(Wallet.from_seed(encode(b"qrpl/user", self.seed, s, u)))
        # each validator also transacts from one wallet on a shard
        for i, vid in enumerate(sorted(self.validators)):
            w = Wallet.from_seed(encode(b"qrpl/vwallet", self.seed, vid))
            self.users[i % n].append(w)
            self.wallet_owner[id(w)] = vid
        self.minted = 0
        for s in range(n):
            for j, w in enumerate(self.users[s]):
                kp = w.fresh_key(encode(b"genesis", s, j))
                ledger, _ = self.oracle.deposit(self.shards[s].ledger, cfg.initial_balance, kp)
                self.shards[s].ledger = ledger
                self.minted += cfg.initial_balance
        self.fee_records: dict[str, list[int]] = {v: [] for v in self.validators}
        self.mempool: list[list[Transaction]] = [[] for _ in range(n)]
        self.reserved: list[set] = [set() for _ in range(n)]
        self.recent: list[list[Transaction]] = [[] for _ in range(n)]
        self.assignment = assign_validators(list(self.validators), self.beacon.value, 0, n)
        self._record(0, -1, "genesis", encode(self.minted, [s.ledger.to_bytes() for s in self.shards]))

    # -- event plumbing ----------------------------------------------------

    def _schedule(self, time_us: int, kind: str, data: Any):
        heapq.heappush(self._queue, (time_us, self._seq, kind, data))
        self._seq += 1

    def _record(self, time_us: int, shard: int, kind: str, payload: bytes):
        self.events.append(Event(time_us, shard, kind, crypto.hash_bytes(payload).hex()))

    def _jitter(self, seconds: float) -> int:
        j = self.net.jitter_fraction
        factor = 1 + self.rng.uniform(-j, j) if j else 1.0
        return seconds_to_us(seconds * factor)

    # -- audits ------------------------------------------------------------

    def _audit(self):
        total = 0
        for sh in self.shards:
            try:
                sh.ledger.audit()
            except AssertionError as e:
                self.audit_ok["ledger_bookkeeping"] = False
                log.error("shard %d bookkeeping: %s", sh.shard_id, e)
            total += sh.ledger.unspent_value() + sh.ledger.locked_value()
        burned = sum(sh.ledger.fees_burned for sh in self.shards)
        if total != self.minted - burned:
            self.audit_ok["conservation"] = False
            log.error("conservation broken: %d != %d - %d", total, self.minted, burned)

    def _consume(self, token_ids):
        for tid in token_ids:
            if tid in self.consumed:
                self.audit_ok["no_double_consume"] = False
            self.consumed.add(tid)

    # -- run ---------------------------------------------------------------

    def run(self) -> SimReport:
        bt = self.net.block_time_us
        for k in range(1, self.config.blocks + 1):
            self._schedule(k * bt, "round", k)
        while self._queue:
            time_us, _, kind, data = heapq.heappop(self._queue)
            getattr(self, f"_on_{kind}")(time_us, data)
            self._audit()
        self._final_audits()
        return self._report()

    def _on_round(self, now: int, k: int):
        self.beacon = beacon_next(self.beacon)
        params = self.config.consensus
        if k % params.epoch_blocks == 0:
            self._new_epoch(now, k // params.epoch_blocks)
        for s in range(self.net.shard_count):
            self._generate_load(now, s)
            self._block(now, s, k)

    def _new_epoch(self, now: int, epoch: int):
        # activity for the next epoch is the fees each validator paid during the last one
        for vid, v in self.validators.items():
            records = self.fee_records[vid]
            v = replace(v, activity=0)
            if records:
                v = accrue_activity(v, sum(records), prove_activity(vid, records))
            self.validators[vid] = v
            self.fee_records[vid] = []
        self.assignment = assign_validators(list(self.validators), self.beacon.value, epoch,
                                            self.net.shard_count)
        self.stats["epochs"] += 1
        self._record(now, -1, "epoch", encode(epoch, self.beacon.value.bytes,
                                              sorted(self.assignment.mapping.items())))

    def _committee(self, s: int) -> list[Validator]:
        return [self.validators[v] for v in self.assignment.members(s)]

    def _generate_load(self, now: int, s: int):
        cfg = self.config
        wallets = self.users[s]
        ledger = self.shards[s].ledger
        for _ in range(cfg.payments_per_block):
            payer, payee = self.rng.sample(wallets, 2)
            amount = self.rng.randint(1, 20_000)
            try:
                tr = pay(ledger, payer, payee.public_key, amount, exclude=self.reserved[s])
            except InsufficientFundsError:
                self.stats["payments_unfunded"] += 1
                continue
            payee.receive(tr.notes[0])
            payer.receive(*tr.notes[1:])
            self.reserved[s].update(tr.tx.inputs)
            self.mempool[s].append(tr.tx)
            owner = self.wallet_owner.get(id(payer))
            if owner is not None:
                self.fee_records[owner].append(tr.tx.fee)
        if self.recent[s] and self.rng.random() < cfg.replay_rate:
            self.mempool[s].append(self.rng.choice(self.recent[s]))
            self.stats["replays_injected"] += 1
        if self.net.shard_count > 1:
            for _ in range(cfg.swaps_per_block):
                self._start_swap(now, s)

    def _start_swap(self, now: int, s: int):
        target = self.rng.choice([t for t in range(self.net.shard_count) if t != s])
        payer = self.rng.choice(self.users[s])
        payee = self.rng.choice(self.users[target])
        ledger = self.shards[s].ledger
        coins = [t for t in payer.tokens(ledger) if t.token_id not in self.reserved[s]]
        if not coins:
            return
        tok = self.rng.choice(coins)
        recipient = payee.fresh_key(encode(b"swap", s, now, tok.token_id.bytes))
        swap, ledger = swap_initiate(ledger, s, target, tok.token_id, payer, recipient, now, self.net)
        self.shards[s].ledger = ledger
        self.swaps[swap.swap_id] = swap
        self.swap_history[swap.swap_id] = list(swap.history)
        self.stats["swaps_initiated"] += 1
        self._record(now, s, "swap_lock", encode(swap.swap_id.bytes, tok.token_id.bytes, tok.value))
        self._schedule(swap.deadline_us, "swap_deadline", swap.swap_id)
        if self.rng.random() < self.net.loss_probability:
            self.stats["relays_lost"] += 1
            return
        delay = (swap.proof.simulated_gen_ms * 1000 + self._jitter(self.net.cross_shard_delay_s)
                 + self._jitter(self.net.propagation_delay_s) + self._jitter(self.net.vote_delay_s))
        self._schedule(now + delay, "swap_relay", swap.swap_id)

    def _block(self, now: int, s: int, k: int):
        committee = self._committee(s)
        pid = select_proposer(committee, self.beacon.value, k, self.config.consensus)
        proposer = self.validators[pid]
        sh = self.shards[s]
        res = produce_block(sh, self.mempool[s], self.net, proposer, committee, self.beacon.value,
                            k, now, self.config.consensus)
        self.shards[s] = res.shard
        self.mempool[s] = res.leftover
        for tx, verdict in res.rejected:
            self.stats[f"rejected_{verdict.value}"] += 1
        for tx in res.block.txs:
            self._consume(tx.inputs)
        fees = sum(tx.fee for tx in res.block.txs)
        self.validators[pid] = replace(proposer, rewards=proposer.rewards + fees)
        self.stats["txs_applied"] += len(res.block.txs)
        self.stats["blocks"] += 1
        self.recent[s] = list(res.block.txs[-5:]) or self.recent[s]
        self.reserved[s] = {tid for tx in self.mempool[s] for tid in tx.inputs}
        self.block_times[s].append(now)
        self._record(now, s, "block", encode(res.block.block_hash.bytes, res.block.height, pid))
        if self.rng.random() < self.config.double_sign_rate:
            v, ev = slash(self.validators[pid], self.config.consensus, SlashReason.DOUBLE_SIGN,
                          res.block.height)
            self.validators[pid] = v
            self.slashings.append(ev)
            self._record(now, s, "slash", encode(pid, ev.stake_before, ev.stake_after))

    def _note_swap(self, swap: CrossShardSwap):
        self.swaps[swap.swap_id] = swap
        self.swap_history[swap.swap_id] = list(swap.history)

    def _on_swap_relay(self, now: int, swap_id):
        swap = self.swaps[swap_id]
        src, dst = self.shards[swap.source], self.shards[swap.target]
        try:
            swap, src.ledger, dst.ledger = swap_complete(swap, swap.proof, src.ledger, dst.ledger, now)
        except StaleSwapError:
            self.stats["swaps_stale"] += 1
            self._record(now, swap.target, "swap_stale", swap_id.bytes)
            return
        self._consume([swap.locked_token.token_id])
        self._note_swap(swap)
        self.stats["swaps_completed"] += 1
        self.swap_latencies_us.append(swap.finished_us - swap.initiated_us)
        self._record(now, swap.target, "swap_unlock", encode(swap_id.bytes, swap.target_token.token_id.bytes))

    def _on_swap_deadline(self, now: int, swap_id):
        swap = self.swaps[swap_id]
        if swap.terminal:
            return
        src = self.shards[swap.source]
        swap, src.ledger = swap_timeout(swap, src.ledger, now)
        self._note_swap(swap)
        self.stats["swaps_refunded"] += 1
        self._record(now, swap.source, "swap_refund", swap_id.bytes)

    def _final_audits(self):
        for hist in self.swap_history.values():
            terminals = [h for h in hist if h in (SwapState.UNLOCKED_AT_TARGET, SwapState.REFUNDED)]
            if len(terminals) > 1:
                self.audit_ok["swap_atomicity"] = False
        if any(not sw.terminal for sw in self.swaps.values()):
            self.audit_ok["swap_atomicity"] = False
        bt = self.net.block_time_us
        for times in self.block_times.values():
            if any(b - a != bt for a, b in zip(times, times[1:])):
                self.audit_ok["block_interval"] = False
        if not self.oracle.trail.verify() or self.oracle.trail.net_issuance() != self.minted:
            self.audit_ok["conservation"] = False

    def _report(self) -> SimReport:
        vals = list(self.validators.values())
        stats = dict(sorted(self.stats.items()))
        stats["final_supply"] = sum(sh.ledger.total_supply for sh in self.shards)
        stats["minted"] = self.minted
        stats["fees_burned"] = sum(sh.ledger.fees_burned for sh in self.shards)
        stats["shard_heights"] = [sh.height for sh in self.shards]
        stats["slashings"] = len(self.slashings)
        stats["max_swap_latency_s"] = max(self.swap_latencies_us, default=0) / 1e6
        adversary = {v.id for v in sorted(vals, key=lambda v: v.id)[: max(1, len(vals) // 3)]}
        stats["adversary_ratios"] = adversary_ratios(vals, adversary, self.config.consensus)
        return SimReport(self.config.to_dict(), self.seed, self.events, dict(self.audit_ok), stats)


def simulate(config: SimConfig = SimConfig(), seed: int = 0) -> SimReport:
    return Simulator(config, seed).run()
