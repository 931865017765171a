"""Privacy-weighted proof of stake.

A validator's weight is its stake plus ``alpha_weight`` times its activity
score, where activity is the cumulative fees it has paid (attested by a
proof). Proposers are drawn with probability proportional to weight using
per-validator VRF outputs.
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from . import crypto
from .crypto import HashDigest, KeyPair, ProofArtifact, StatementDescriptor, VrfOutput
from .encoding import encode
from .errors import DomainError, NoEligibleValidatorError

log = logging.getLogger(__name__)


def as_fraction(x) -> Fraction:
    # via str so that 0.1 means one tenth, not its binary approximation
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class ConsensusParams:
    alpha_weight: Fraction = Fraction(1, 2)
    slash_penalty: Fraction = Fraction(1, 10)
    fee_rate: Fraction = Fraction(1, 10_000)
    epoch_blocks: int = 360
    adversary_bound: Fraction = Fraction(33, 100)

    def __post_init__(self):
        for name in ("alpha_weight", "slash_penalty", "fee_rate", "adversary_bound"):
            v = as_fraction(getattr(self, name))
            if not 0 < v < 1:
                raise DomainError(f"{name} must lie in (0, 1), got {v}")
            object.__setattr__(self, name, v)
        if self.epoch_blocks < 1:
            raise DomainError("epoch_blocks must be >= 1")


@dataclass(frozen=True)
class Validator:
    id: str
    stake: int
    keypair: KeyPair = field(repr=False)
    activity: int = 0
    shard: int = 0
    rewards: int = 0

    def __post_init__(self):
        if self.stake < 0 or self.activity < 0:
            raise DomainError("stake and activity must be non-negative")


def compute_weight(validator: Validator, params: ConsensusParams = ConsensusParams()) -> Fraction:
    return validator.stake + params.alpha_weight * validator.activity


# -- activity --------------------------------------------------------------

def activity_statement(validator_id: str, fees_paid: int) -> StatementDescriptor:
    def predicate(fee_records: Sequence[int]) -> bool:
        return all(f >= 0 for f in fee_records) and sum(fee_records) == fees_paid

    return StatementDescriptor("activity", (validator_id, fees_paid), predicate)


def prove_activity(validator_id: str, fee_records: Sequence[int], **kw) -> ProofArtifact:
    """Attest that ``fee_records`` (the fees a validator paid) sum to their total."""
    return crypto.prove(activity_statement(validator_id, sum(fee_records)), list(fee_records), **kw)


def accrue_activity(validator: Validator, fees_paid: int, proof: ProofArtifact) -> Validator:
    if fees_paid < 0:
        raise DomainError("fees_paid must be non-negative")
    if not crypto.verify_proof(activity_statement(validator.id, fees_paid), proof):
        log.warning("rejected activity proof for %s", validator.id)
        return validator
    return replace(validator, activity=validator.activity + fees_paid)


def reset_activity(validators: Sequence[Validator]) -> list[Validator]:
    return [replace(v, activity=0) for v in validators]


# -- proposer selection ----------------------------------------------------

def selection_input(beacon_value: HashDigest, round: int) -> bytes:
    return encode(b"qrpl/select", beacon_value.bytes, round)


def selection_score(output: VrfOutput, weight: Fraction) -> float:
    """log(u) / w, the log of u ** (1 / w); larger is better."""
    u = output.fraction
    if u == 0.0:
        return -math.inf
    return math.log(u) / float(weight)


def select_proposer(validators: Sequence[Validator], beacon_value: HashDigest, round: int,
                    params: ConsensusParams = ConsensusParams()) -> str:
    """Weighted proposer draw: the maximal VRF score ``u ** (1 / weight)`` wins.

    The maximum of ``u_i ** (1 / w_i)`` over independent uniforms falls on
    validator ``i`` with probability ``w_i / sum(w)``. Ties go to the lowest id.
    """
    data = selection_input(beacon_value, round)
    best_id, best = None, None
    for v in sorted(validators, key=lambda v: v.id):
        w = compute_weight(v, params)
        if w <= 0:
            continue
        s = selection_score(crypto.vrf_eval(v.keypair, data), w)
        if best is None or s > best:
            best_id, best = v.id, s
    if best_id is None:
        raise NoEligibleValidatorError("no validator has positive weight")
    return best_id


def verify_proposer_claim(validator: Validator, beacon_value: HashDigest, round: int,
                          output: VrfOutput) -> bool:
    return crypto.vrf_verify(validator.keypair.public_key, selection_input(beacon_value, round), output)


# -- slashing --------------------------------------------------------------

class SlashReason(enum.Enum):
    DOUBLE_SIGN = "DoubleSign"
    INVALID_BLOCK = "InvalidBlock"


@dataclass(frozen=True)
class SlashingEvent:
    validator_id: str
    reason: SlashReason
    height: int
    stake_before: int
    stake_after: int
    noop: bool = False


def slash(validator: Validator, params: ConsensusParams = ConsensusParams(),
          reason: SlashReason = SlashReason.DOUBLE_SIGN, height: int = 0) -> tuple[Validator, SlashingEvent]:
    if validator.stake == 0:
        log.warning("slash of %s skipped: no stake", validator.id)
        return validator, SlashingEvent(validator.id, reason, height, 0, 0, noop=True)
    after = math.floor(validator.stake * (1 - params.slash_penalty))
    return (replace(validator, stake=after),
            SlashingEvent(validator.id, reason, height, validator.stake, after))


# -- attack cost -----------------------------------------------------------

def _num(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


@dataclass(frozen=True)
class AttackCostReport:
    weight_gain: Fraction
    required_activity: Fraction
    sham_volume: Fraction
    fee_cost: Fraction
    profitable: bool

    def to_dict(self) -> dict:
        d = {k: _num(v) if isinstance(v, Fraction) else v for k, v in asdict(self).items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def attack_cost(total_stake: int, params: ConsensusParams, target_relative_gain,
                block_reward_value: int) -> AttackCostReport:
    """Cost of inflating one's relative weight by ``target_relative_gain`` with sham activity."""
    gain = as_fraction(target_relative_gain)
    if not 0 <= gain < 1:
        raise DomainError("target_relative_gain must lie in [0, 1)")
    if params.fee_rate == 0:
        raise ZeroDivisionError("fee_rate is zero")
    weight_gain = gain * total_stake
    required = weight_gain / params.alpha_weight
    fee_cost = required  # activity is fees paid
    volume = required / params.fee_rate
    return AttackCostReport(weight_gain, required, volume, fee_cost, block_reward_value > fee_cost)


def adversary_ratios(validators: Sequence[Validator], adversary_ids: set[str],
                     params: ConsensusParams = ConsensusParams()) -> dict:
    """Adversary share of stake and of weight (the bound is stated for stake)."""
    stake = sum(v.stake for v in validators)
    weight = sum(compute_weight(v, params) for v in validators)
    adv = [v for v in validators if v.id in adversary_ids]
    return {
        "stake_ratio": float(Fraction(sum(v.stake for v in adv), stake)) if stake else 0.0,
        "weight_ratio": float(sum(compute_weight(v, params) for v in adv) / weight) if weight else 0.0,
        "bound": float(params.adversary_bound),
    }
