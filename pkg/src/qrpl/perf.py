"""Analytical and Monte Carlo performance model.

Throughput follows the block-level model: transactions per block, reduced by
cross-shard overhead, divided by block time, multiplied by shard count, with
normally distributed per-shard variation truncated at zero. Latency sums
per-transaction component draws. Storage is simple growth arithmetic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError

ENERGY_KWH_PER_TX = 0.000002  # literature estimate, reported as-is and never measured
GB = 10 ** 9


class CorrelationMode(enum.Enum):
    INDEPENDENT = "independent"
    COMMON_SHOCK = "common-shock"


@dataclass(frozen=True)
class ThroughputParams:
    block_time_s: float = 10.0
    avg_pqc_sig_kb: float = 2.5
    avg_zkp_kb: float = 100.0
    other_tx_kb: float = 1.0
    block_size_limit_kb: float = 4096.0
    tx_per_block: int = 20
    cross_shard_reduction: float = 0.85
    shards: int = 256
    num_runs: int = 1000
    std_factor: float = 0.3
    correlation_mode: CorrelationMode = CorrelationMode.INDEPENDENT

    def __post_init__(self):
        mode = self.correlation_mode
        if isinstance(mode, str):
            object.__setattr__(self, "correlation_mode", CorrelationMode(mode))
        for name in ("block_time_s", "avg_pqc_sig_kb", "avg_zkp_kb", "other_tx_kb",
                     "block_size_limit_kb", "tx_per_block", "cross_shard_reduction", "shards", "num_runs"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if not 0 <= self.std_factor < 1:
            raise DomainError("std_factor must lie in [0, 1)")

    @property
    def tx_kb(self) -> float:
        return self.avg_pqc_sig_kb + self.avg_zkp_kb + self.other_tx_kb

    @property
    def effective_tx_per_block(self) -> float:
        return self.tx_per_block * self.cross_shard_reduction

    @property
    def tps_per_shard(self) -> float:
        return self.effective_tx_per_block / self.block_time_s

    @property
    def tps_global(self) -> float:
        return self.tps_per_shard * self.shards

    def to_dict(self) -> dict:
        d = asdict(self)
        d["correlation_mode"] = self.correlation_mode.value
        return d


def block_capacity(params: ThroughputParams = ThroughputParams()) -> int:
    """Most transactions whose component sizes fit in one block."""
    return math.floor(params.block_size_limit_kb / params.tx_kb)


@dataclass(frozen=True)
class SimResult:
    tps_per_shard: float
    tps_global: float
    ci_per_shard: tuple[float, float]
    ci_global: tuple[float, float]
    mean_per_shard: float
    mean_global: float
    std_per_shard: float
    std_global: float
    # moments of the pre-truncation draws, i.e. of the modelled shard variation
    raw_mean_per_shard: float
    raw_std_per_shard: float
    raw_mean_global: float
    raw_std_global: float
    params: ThroughputParams
    seed: int
    # (num_runs, shards) in independent mode; (num_runs,) common draws otherwise
    samples: np.ndarray = field(repr=False, compare=False)
    global_samples: np.ndarray = field(repr=False, compare=False)

    @property
    def band_per_shard(self) -> tuple[float, float]:
        """Estimated mean plus or minus one standard deviation of the shard variation."""
        return (self.raw_mean_per_shard - self.raw_std_per_shard,
                self.raw_mean_per_shard + self.raw_std_per_shard)

    @property
    def band_global(self) -> tuple[float, float]:
        return (self.raw_mean_global - self.raw_std_global, self.raw_mean_global + self.raw_std_global)

    @property
    def retained_band_per_shard(self) -> tuple[float, float]:
        """Same band over the zero-truncated samples; slightly narrower and shifted up."""
        return (self.mean_per_shard - self.std_per_shard, self.mean_per_shard + self.std_per_shard)

    @property
    def retained_band_global(self) -> tuple[float, float]:
        return (self.mean_global - self.std_global, self.mean_global + self.std_global)

    def to_dict(self) -> dict:
        return {
            "tps_per_shard": self.tps_per_shard,
            "tps_global": self.tps_global,
            "ci_per_shard": list(self.ci_per_shard),
            "ci_global": list(self.ci_global),
            "mean_per_shard": self.mean_per_shard,
            "mean_global": self.mean_global,
            "band_per_shard": list(self.band_per_shard),
            "band_global": list(self.band_global),
            "retained_band_per_shard": list(self.retained_band_per_shard),
            "retained_band_global": list(self.retained_band_global),
            "mode": self.params.correlation_mode.value,
            "params": self.params.to_dict(),
            "seed": self.seed,
        }


def _run_rng(seed: int, run: int) -> np.random.Generator:
    # one stream per (seed, run) so that runs can be computed in any order
    return np.random.default_rng([seed, run])


def run_samples(params: ThroughputParams, seed: int, runs: range | None = None) -> np.ndarray:
    """Per-run draws before truncation; rows are runs. Independent of how runs are partitioned."""
    runs = range(params.num_runs) if runs is None else runs
    mean = params.tps_per_shard
    std = mean * params.std_factor
    width = params.shards if params.correlation_mode is CorrelationMode.INDEPENDENT else 1
    out = np.empty((len(runs), width))
    for i, r in enumerate(runs):
        out[i] = _run_rng(seed, r).normal(mean, std, width)
    return out


def _std(x: np.ndarray) -> float:
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def throughput_model(params: ThroughputParams = ThroughputParams(), seed: int = 0) -> SimResult:
    raw = run_samples(params, seed)
    draws = np.maximum(raw, 0.0)
    if params.correlation_mode is CorrelationMode.INDEPENDENT:
        pooled, raw_pooled = draws, raw
        global_samples, raw_global = draws.sum(axis=1), raw.sum(axis=1)
    else:
        # every shard shares its run's draw; pooling over shards repeats it
        pooled, raw_pooled = draws[:, 0], raw[:, 0]
        global_samples, raw_global = pooled * params.shards, raw_pooled * params.shards
        draws = pooled
    lo_s, hi_s = np.percentile(pooled, [2.5, 97.5])
    lo_g, hi_g = np.percentile(global_samples, [2.5, 97.5])
    return SimResult(
        tps_per_shard=params.tps_per_shard,
        tps_global=params.tps_global,
        ci_per_shard=(float(lo_s), float(hi_s)),
        ci_global=(float(lo_g), float(hi_g)),
        mean_per_shard=float(pooled.mean()),
        mean_global=float(global_samples.mean()),
        std_per_shard=_std(pooled),
        std_global=_std(global_samples),
        raw_mean_per_shard=float(raw_pooled.mean()),
        raw_std_per_shard=_std(raw_pooled),
        raw_mean_global=float(raw_global.mean()),
        raw_std_global=_std(raw_global),
        params=params,
        seed=seed,
        samples=draws,
        global_samples=global_samples,
    )


@dataclass(frozen=True)
class SweepRow:
    std_factor: float
    tx_per_block: int
    result: SimResult

    def to_dict(self) -> dict:
        return {"std_factor": self.std_factor, "tx_per_block": self.tx_per_block, **self.result.to_dict()}


SWEEP_RUNS = 20_000


def sensitivity_sweep(base: ThroughputParams, std_factors: Sequence[float],
                      tx_per_block_values: Sequence[int], seed: int = 0,
                      mode: CorrelationMode = CorrelationMode.COMMON_SHOCK) -> list[SweepRow]:
    """Evaluate the model over the ``std_factors`` x ``tx_per_block_values`` grid.

    Band estimates from 10^3 runs wobble by about 2%, so callers reproducing
    published bands should raise ``base.num_runs`` (see SWEEP_RUNS).
    """
    rows = []
    for sf in std_factors:
        for tpb in tx_per_block_values:
            p = replace(base, std_factor=sf, tx_per_block=tpb, correlation_mode=mode)
            rows.append(SweepRow(sf, tpb, throughput_model(p, seed)))
    return rows


# -- latency ---------------------------------------------------------------

LATENCY_TARGET_MEAN_S = 1.5


@dataclass(frozen=True)
class LatencyParams:
    proof_gen_s: tuple[float, float] = (0.2, 0.5)
    propagation_s: float = 0.3
    vote_s: float = 0.3
    cross_shard_s: float = 0.7
    cross_shard_fraction: float | None = None  # None: calibrate to LATENCY_TARGET_MEAN_S
    jitter_std_fraction: float = 0.4

    def __post_init__(self):
        lo, hi = self.proof_gen_s
        if not 0 <= lo <= hi:
            raise DomainError("proof_gen_s must be an ordered non-negative range")
        for name in ("propagation_s", "vote_s", "cross_shard_s", "jitter_std_fraction"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if self.cross_shard_fraction is not None and not 0 <= self.cross_shard_fraction <= 1:
            raise DomainError("cross_shard_fraction must lie in [0, 1]")

    @property
    def base_mean_s(self) -> float:
        return sum(self.proof_gen_s) / 2 + self.propagation_s + self.vote_s

    def calibrated_fraction(self, target_mean_s: float = LATENCY_TARGET_MEAN_S) -> float:
        """Share of cross-shard transactions that makes component means hit ``target_mean_s``."""
        if self.cross_shard_s == 0:
            return 0.0
        return min(1.0, max(0.0, (target_mean_s - self.base_mean_s) / self.cross_shard_s))

    @property
    def effective_fraction(self) -> float:
        f = self.cross_shard_fraction
        return self.calibrated_fraction() if f is None else f


@dataclass(frozen=True)
class LatencyReport:
    mean_s: float
    ci_s: tuple[float, float]
    fraction_under_2s: float
    cross_shard_fraction: float
    calibrated: bool
    component_means_s: dict
    n_samples: int
    seed: int
    samples: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "mean_s": self.mean_s,
            "ci_s": list(self.ci_s),
            "fraction_under_2s": self.fraction_under_2s,
            "cross_shard_fraction": self.cross_shard_fraction,
            "cross_shard_fraction_calibrated": self.calibrated,
            "component_means_s": self.component_means_s,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "calibration_note": (
                "component means sum to {:.2f} s with every transaction cross-shard; the "
                "cross-shard share is solved so the expected latency is {:.2f} s".format(
                    self.component_means_s["all_components"], LATENCY_TARGET_MEAN_S)),
        }


def _gamma(rng: np.random.Generator, mean: float, cv: float, n: int) -> np.ndarray:
    # non-negative delay with the given mean and coefficient of variation
    if mean == 0:
        return np.zeros(n)
    if cv == 0:
        return np.full(n, mean)
    k = 1.0 / cv ** 2
    return rng.gamma(k, mean / k, n)


def latency_model(params: LatencyParams = LatencyParams(), n_samples: int = 100_000,
                  seed: int = 0) -> LatencyReport:
    if n_samples < 10_000:
        raise DomainError("latency model needs at least 10^4 samples")
    rng = np.random.default_rng(seed)
    cv = params.jitter_std_fraction
    frac = params.effective_fraction
    proof = rng.uniform(*params.proof_gen_s, n_samples)
    prop = _gamma(rng, params.propagation_s, cv, n_samples)
    vote = _gamma(rng, params.vote_s, cv, n_samples)
    cross = _gamma(rng, params.cross_shard_s, cv, n_samples) * (rng.random(n_samples) < frac)
    total = proof + prop + vote + cross
    lo, hi = np.percentile(total, [2.5, 97.5])
    comps = {
        "proof_gen": sum(params.proof_gen_s) / 2,
        "propagation": params.propagation_s,
        "vote": params.vote_s,
        "cross_shard": params.cross_shard_s,
        "all_components": params.base_mean_s + params.cross_shard_s,
    }
    return LatencyReport(float(total.mean()), (float(lo), float(hi)), float((total < 2.0).mean()),
                         frac, params.cross_shard_fraction is None, comps, n_samples, seed, total)


# -- storage ---------------------------------------------------------------

# bytes per transaction implied by ~1 GB per shard-year at 10^6 tx per day
REFERENCE_RETAINED_BYTES_PER_TX = GB / (365 * 10 ** 6)
PHYSICAL_RETAINED_BYTES_PER_TX = (2.5 + 100 + 1) * 1024
REFERENCE_COMPRESSION_RATIO = 100 / 256


@dataclass(frozen=True)
class StorageReport:
    per_shard_bytes_per_year: float
    network_bytes_per_year: float
    compressed_network_bytes_per_year: float
    inputs: dict

    def to_dict(self) -> dict:
        return {
            "per_shard_gb_per_year": self.per_shard_bytes_per_year / GB,
            "network_gb_per_year": self.network_bytes_per_year / GB,
            "compressed_network_gb_per_year": self.compressed_network_bytes_per_year / GB,
            "energy_kwh_per_tx_constant": ENERGY_KWH_PER_TX,
            "inputs": self.inputs,
        }


def storage_model(tx_per_day_per_shard: float = 1e6, shards: int = 256,
                  retained_bytes_per_tx: float = REFERENCE_RETAINED_BYTES_PER_TX,
                  compression_ratio: float = REFERENCE_COMPRESSION_RATIO) -> StorageReport:
    if tx_per_day_per_shard < 0 or shards <= 0 or retained_bytes_per_tx <= 0 or not 0 < compression_ratio <= 1:
        raise DomainError("storage inputs must be positive and compression_ratio in (0, 1]")
    per_shard = tx_per_day_per_shard * 365 * retained_bytes_per_tx
    network = per_shard * shards
    return StorageReport(per_shard, network, network * compression_ratio,
                         {"tx_per_day_per_shard": tx_per_day_per_shard, "shards": shards,
                          "retained_bytes_per_tx": retained_bytes_per_tx,
                          "compression_ratio": compression_ratio})
