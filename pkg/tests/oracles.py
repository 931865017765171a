"""Independent reference computations used to check the implementation.

Nothing here imports the package; each oracle recomputes its quantity from
first principles.
"""
from __future__ import annotations

import math
from fractions import Fraction

from scipy import stats


def weight(stake, activity, alpha) -> Fraction:
    return Fraction(stake) + Fraction(str(alpha)) * activity


def attack_figures(total_stake: int, alpha: str, fee_rate: str, gain: str) -> dict:
    """Activity needed to buy ``gain`` of relative weight, and what it costs."""
    weight_gain = Fraction(gain) * total_stake
    activity = weight_gain / Fraction(alpha)
    return {"required_activity": activity, "sham_volume": activity / Fraction(fee_rate),
            "fee_cost": activity}


def block_capacity_kb(limit_kb: float, sig_kb: float, zkp_kb: float, other_kb: float) -> int:
    n = 0
    while (n + 1) * (sig_kb + zkp_kb + other_kb) <= limit_kb:
        n += 1
    return n


def throughput_closed_form(tx_per_block, reduction, block_time_s, shards) -> tuple[Fraction, Fraction]:
    per_shard = Fraction(tx_per_block) * Fraction(str(reduction)) / Fraction(str(block_time_s))
    return per_shard, per_shard * shards


def normal_ci(mean: float, std: float, level: float = 0.95) -> tuple[float, float]:
    z = stats.norm.ppf(0.5 + level / 2)
    return mean - z * std, mean + z * std


def hypergeom_tail(population: int, marked: int, draws: int, at_least: int) -> float:
    return float(stats.hypergeom.sf(at_least - 1, population, marked, draws))


def shard_sizes(validators: int, shards: int) -> list[int]:
    base, extra = divmod(validators, shards)
    return [base + 1] * extra + [base] * (shards - extra)


def compromise_threshold(size: int) -> int:
    """Smallest member count that is at least one third of ``size``."""
    return math.ceil(Fraction(size, 3))


def storage_gb(tx_per_day: float, shards: int, bytes_per_tx: float, ratio: float) -> tuple[float, float, float]:
    per_shard = tx_per_day * 365 * bytes_per_tx / 1e9
    return per_shard, per_shard * shards, per_shard * shards * ratio


def chi_square_uniform(counts) -> float:
    return float(stats.chisquare(counts).pvalue)


class Accounting:
    """Brute-force supply bookkeeping: every token value that ever entered or left."""

    def __init__(self):
        self.minted = 0
        self.redeemed = 0
        self.fees = 0

    def supply(self) -> int:
        return self.minted - self.redeemed - self.fees
