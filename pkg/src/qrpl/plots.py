"""Matplotlib figures for the report path. Always renders off-screen."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .perf import LatencyReport, SimResult, SweepRow  # noqa: E402


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def throughput_figure(result: SimResult, path: Path) -> Path:
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    per_shard = result.samples.ravel()
    a.hist(per_shard, bins=60, color="tab:blue", alpha=0.8)
    a.axvline(result.tps_per_shard, color="k", label="closed form")
    for x in result.ci_per_shard:
        a.axvline(x, color="tab:red", ls="--")
    a.set(xlabel="TPS per shard", ylabel="count", title="Per-shard throughput")
    a.legend()
    b.hist(result.global_samples, bins=60, color="tab:green", alpha=0.8)
    b.axvline(result.tps_global, color="k", label="closed form")
    for x in result.ci_global:
        b.axvline(x, color="tab:red", ls="--", label=None)
    b.set(xlabel="global TPS", title=f"Global throughput ({result.params.correlation_mode.value})")
    b.legend()
    fig.tight_layout()
    return _save(fig, path)


def sensitivity_figure(rows: Sequence[SweepRow], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    for sf in sorted({r.std_factor for r in rows}):
        sel = sorted((r for r in rows if r.std_factor == sf), key=lambda r: r.tx_per_block)
        xs = [r.tx_per_block for r in sel]
        lo = [r.result.band_global[0] for r in sel]
        hi = [r.result.band_global[1] for r in sel]
        ax.fill_between(xs, lo, hi, alpha=0.25, label=f"std {sf:g} band")
        ax.plot(xs, [r.result.tps_global for r in sel], marker="o")
    ax.set(xlabel="transactions per block", ylabel="global TPS", title="Sensitivity")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def latency_figure(report: LatencyReport, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(report.samples, bins=100, color="tab:purple", alpha=0.8)
    ax.axvline(report.mean_s, color="k", label=f"mean {report.mean_s:.2f} s")
    ax.axvline(2.0, color="tab:orange", ls=":", label=f"{report.fraction_under_2s:.1%} under 2 s")
    for x in report.ci_s:
        ax.axvline(x, color="tab:red", ls="--")
    ax.set(xlabel="latency (s)", ylabel="count", title="Transaction latency")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def simulation_figure(stats: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    keys = [k for k, v in stats.items() if isinstance(v, int) and not isinstance(v, bool)
            and k not in ("final_supply", "minted")]
    ax.barh(keys, [stats[k] for k in keys], color="tab:gray")
    ax.set(xlabel="count", title="Simulation counters")
    fig.tight_layout()
    return _save(fig, path)
