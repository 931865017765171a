from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import block_capacity_kb, normal_ci, storage_gb, throughput_closed_form
from qrpl.errors import DomainError
from qrpl.perf import (ENERGY_KWH_PER_TX, REFERENCE_COMPRESSION_RATIO, REFERENCE_RETAINED_BYTES_PER_TX,
                       PHYSICAL_RETAINED_BYTES_PER_TX, CorrelationMode, LatencyParams, ThroughputParams,
                       block_capacity, latency_model, run_samples, sensitivity_sweep, storage_model,
                       throughput_model)

CS = CorrelationMode.COMMON_SHOCK


def test_closed_form_matches_oracle():
    p = ThroughputParams()
    per_shard, total = throughput_closed_form(20, 0.85, 10, 256)
    assert p.tps_per_shard == pytest.approx(float(per_shard), abs=1e-12) and float(per_shard) == 1.7
    assert p.tps_global == pytest.approx(float(total), abs=1e-9) and float(total) == 435.2


@given(st.integers(1, 100), st.floats(0.1, 1.0), st.floats(10, 20), st.integers(1, 512))
def test_closed_form_identities(tpb, red, bt, shards):
    p = ThroughputParams(tx_per_block=tpb, cross_shard_reduction=red, block_time_s=bt, shards=shards)
    assert p.tps_per_shard == pytest.approx(tpb * red / bt)
    assert p.tps_global == pytest.approx(shards * p.tps_per_shard)


def test_block_capacity_oracle():
    assert block_capacity() == block_capacity_kb(4096, 2.5, 100, 1) == 39
    assert block_capacity(ThroughputParams(avg_zkp_kb=45)) == block_capacity_kb(4096, 2.5, 45, 1)


def test_independent_cis_match_normal_oracle():
    res = throughput_model(ThroughputParams(), seed=42)
    lo, hi = normal_ci(1.7, 0.51)
    assert res.ci_per_shard == pytest.approx((lo, hi), abs=0.03)
    glo, ghi = normal_ci(435.2, 0.51 * 16)
    assert res.ci_global == pytest.approx((glo, ghi), abs=2.0)


def test_zero_variance_collapses_to_mean():
    res = throughput_model(ThroughputParams(std_factor=0, num_runs=50), seed=1)
    assert res.ci_per_shard == pytest.approx((1.7, 1.7)) and res.ci_global == pytest.approx((435.2, 435.2))
    assert res.band_global == pytest.approx((435.2, 435.2))


@pytest.mark.parametrize("mode", list(CorrelationMode))
def test_sample_mean_converges(mode):
    p = ThroughputParams(num_runs=2_000, correlation_mode=mode)
    res = throughput_model(p, seed=3)
    n = res.samples.size
    assert abs(res.mean_per_shard - 1.7) < 3 * res.std_per_shard / math.sqrt(n)
    assert abs(res.mean_global - 435.2) < 3 * res.std_global / math.sqrt(p.num_runs)


def test_reproducible_and_partition_invariant():
    p = ThroughputParams(num_runs=200)
    a, b = throughput_model(p, 9), throughput_model(p, 9)
    assert a == b and np.array_equal(a.samples, b.samples)
    assert a.ci_global != throughput_model(p, 10).ci_global
    whole = run_samples(p, 9)
    parts = np.vstack([run_samples(p, 9, range(0, 77)), run_samples(p, 9, range(77, 200))])
    assert np.array_equal(whole, parts)
    with ThreadPoolExecutor(4) as pool:
        chunks = list(pool.map(lambda r: run_samples(p, 9, r), [range(i, i + 50) for i in range(0, 200, 50)]))
    assert np.array_equal(whole, np.vstack(chunks))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.99), st.sampled_from(list(CorrelationMode)), st.integers(0, 2 ** 32))
def test_no_negative_retained_samples(std, mode, seed):
    res = throughput_model(ThroughputParams(num_runs=50, std_factor=std, correlation_mode=mode), seed)
    assert (res.samples >= 0).all() and (res.global_samples >= 0).all()


def test_common_shock_band():
    res = throughput_model(ThroughputParams(std_factor=0.5, num_runs=20_000, correlation_mode=CS), seed=0)
    assert res.band_per_shard == pytest.approx((0.85, 2.55), rel=0.02)
    assert res.band_global == pytest.approx((217.6, 652.8), rel=0.02)
    # the retained (truncated) samples sit higher and narrower
    assert res.retained_band_per_shard[0] > res.band_per_shard[0]


def test_sensitivity_sweep_grid():
    rows = sensitivity_sweep(ThroughputParams(num_runs=500), [0.3, 0.5], [10, 20, 30], seed=1)
    assert [(r.std_factor, r.tx_per_block) for r in rows] == [(0.3, 10), (0.3, 20), (0.3, 30),
                                                              (0.5, 10), (0.5, 20), (0.5, 30)]
    assert all(r.result.params.correlation_mode is CS for r in rows)
    by_tpb = {r.tx_per_block: r.result for r in rows if r.std_factor == 0.3}
    assert by_tpb[10].tps_global == pytest.approx(217.6) and 200 <= by_tpb[10].mean_global <= 300
    assert by_tpb[30].tps_global == pytest.approx(652.8) and 600 <= by_tpb[30].mean_global <= 900


def test_throughput_param_validation():
    with pytest.raises(DomainError):
        ThroughputParams(num_runs=0)
    with pytest.raises(DomainError):
        ThroughputParams(std_factor=1.0)
    assert ThroughputParams(correlation_mode="common-shock").correlation_mode is CS


# -- latency ---------------------------------------------------------------

def test_latency_calibration():
    p = LatencyParams()
    assert p.base_mean_s == pytest.approx(0.95)
    assert p.calibrated_fraction() == pytest.approx(11 / 14)
    rep = latency_model(p, 100_000, seed=0)
    assert rep.mean_s == pytest.approx(1.5, abs=0.1)
    assert rep.fraction_under_2s == pytest.approx(0.89, abs=0.05)
    assert rep.calibrated and "1.65" in rep.to_dict()["calibration_note"]


def test_latency_without_cross_shard():
    rep = latency_model(LatencyParams(cross_shard_fraction=0), 50_000, seed=1)
    assert rep.mean_s == pytest.approx(0.95, abs=0.01)


def test_latency_without_jitter_is_component_sum():
    rep = latency_model(LatencyParams(cross_shard_fraction=1, jitter_std_fraction=0, proof_gen_s=(0.35, 0.35)),
                        10_000, seed=2)
    assert np.allclose(rep.samples, 1.65)


def test_latency_mean_follows_component_means():
    p = LatencyParams(cross_shard_fraction=0.5, jitter_std_fraction=0.3)
    rep = latency_model(p, 200_000, seed=3)
    expect = 0.35 + 0.3 + 0.3 + 0.5 * 0.7
    assert abs(rep.mean_s - expect) < 4 * rep.samples.std() / math.sqrt(rep.n_samples)
    assert (rep.samples >= 0).all()


def test_latency_domain():
    with pytest.raises(DomainError):
        latency_model(LatencyParams(), 9_999)
    with pytest.raises(DomainError):
        LatencyParams(cross_shard_fraction=1.5)
    with pytest.raises(DomainError):
        LatencyParams(proof_gen_s=(0.5, 0.2))


def test_latency_reproducible():
    a, b = latency_model(seed=5), latency_model(seed=5)
    assert a == b and np.array_equal(a.samples, b.samples)


# -- storage ---------------------------------------------------------------

def test_storage_defaults_match_oracle():
    rep = storage_model()
    per, net, comp = storage_gb(1e6, 256, REFERENCE_RETAINED_BYTES_PER_TX, REFERENCE_COMPRESSION_RATIO)
    d = rep.to_dict()
    assert d["per_shard_gb_per_year"] == pytest.approx(per) == pytest.approx(1.0)
    assert d["network_gb_per_year"] == pytest.approx(net) == pytest.approx(256.0)
    assert d["compressed_network_gb_per_year"] == pytest.approx(comp) == pytest.approx(100.0)
    assert REFERENCE_RETAINED_BYTES_PER_TX == pytest.approx(2.74, abs=0.01)
    assert d["energy_kwh_per_tx_constant"] == ENERGY_KWH_PER_TX == 2e-6


def test_storage_edge_cases():
    assert storage_model(0).per_shard_bytes_per_year == 0
    phys = storage_model(retained_bytes_per_tx=PHYSICAL_RETAINED_BYTES_PER_TX)
    assert phys.per_shard_bytes_per_year == pytest.approx(1e6 * 365 * 103.5 * 1024)
    with pytest.raises(DomainError):
        storage_model(shards=0)
    with pytest.raises(DomainError):
        storage_model(compression_ratio=0)


def test_params_dict_round_trip():
    p = ThroughputParams(correlation_mode=CS, std_factor=0.4)
    assert ThroughputParams(**p.to_dict()) == p
    assert replace(p, shards=4).tps_global == pytest.approx(4 * 1.7)
