"""Command-line harness: ``qrpl <scenario> [options]``.

Every run writes a report, scenario artifacts and ``manifest.json`` to the
output directory. The manifest stores the resolved run config, its hash and
the SHA3 of every written file, so ``qrpl replay`` can check a rerun
byte-for-byte.

Exit status: 0 on success, 1 when the scenario fails (reason on stderr as
JSON), 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import enum
import hashlib
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import crypto, perf, plots
from .consensus import ConsensusParams, attack_cost
from .errors import ConfigurationError, DomainError, QRPLError
from .issuance import Oracle
from .ledger import LedgerState, Wallet, apply_transaction, build_transfer, pay, validate_transaction
from .network import NetworkConfig
from .offline import (DeviceState, TIERS, Transport, decode_voucher, encode_voucher, offline_transfer,
                      reconcile)
from .simulator import SimConfig, simulate

log = logging.getLogger("qrpl")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 0


class Format(enum.Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class UsageError(ConfigurationError):
    pass


class ScenarioFailure(QRPLError):
    def __init__(self, reason: str, detail: Any = None):
        super().__init__(reason)
        self.reason = reason
        self.detail = detail


# -- scenarios -------------------------------------------------------------

def _fraction(v) -> Fraction:
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return Fraction(str(v))


def _int(v) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError("expected an integer")
    return int(v)


def _float(v) -> float:
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _optional_float(v):
    return None if v is None else _float(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    raise ValueError("expected true or false")


@dataclass
class Outcome:
    report: dict
    artifacts: dict[str, bytes] = field(default_factory=dict)
    figures: dict[str, Callable[[Path], Path]] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    schema: dict[str, Callable[[Any], Any]]
    defaults: dict[str, Any]
    execute: Callable[[dict, int], Outcome]


def _csv(rows: list[dict]) -> bytes:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue().encode()


def _simulate(o: dict, seed: int) -> Outcome:
    net = NetworkConfig(shard_count=o["shards"], block_time_s=o["block_time_s"],
                        loss_probability=o["loss_probability"], jitter_fraction=o["jitter_fraction"],
                        tx_per_block=o["tx_per_block"])
    cfg = SimConfig(network=net, validators=o["validators"], blocks=o["blocks"],
                    users_per_shard=o["users_per_shard"], payments_per_block=o["payments_per_block"],
                    swaps_per_block=o["swaps_per_block"])
    rep = simulate(cfg, seed)
    if not rep.passed:
        raise ScenarioFailure("audit_failed", sorted(k for k, v in rep.audits.items() if not v))
    summary = rep.summary()
    return Outcome(summary, {"events.jsonl": rep.event_log().encode()},
                   {"simulation.png": lambda p: plots.simulation_figure(rep.stats, p)})


def _throughput_params(o: dict) -> perf.ThroughputParams:
    return perf.ThroughputParams(num_runs=o["runs"], std_factor=o["std_factor"],
                                 tx_per_block=o["tx_per_block"], shards=o["shard_count"],
                                 block_time_s=o["block_time_s"],
                                 cross_shard_reduction=o["cross_shard_reduction"],
                                 correlation_mode=perf.CorrelationMode(o["mode"]))


def _perf_throughput(o: dict, seed: int) -> Outcome:
    params = _throughput_params(o)
    res = perf.throughput_model(params, seed)
    report = res.to_dict()
    report["block_capacity"] = perf.block_capacity(params)
    if res.samples.ndim == 2:
        rows = [{"run": r, "global_tps": float(g), **{f"shard_{s}": float(x) for s, x in enumerate(row)}}
                for r, (row, g) in enumerate(zip(res.samples, res.global_samples))]
    else:
        rows = [{"run": r, "per_shard_tps": float(x), "global_tps": float(g)}
                for r, (x, g) in enumerate(zip(res.samples, res.global_samples))]
    artifacts = {"samples.csv": _csv(rows)}
    figures = {"throughput.png": lambda p: plots.throughput_figure(res, p)}
    if o["sweep"]:
        base = perf.ThroughputParams(**{**params.to_dict(), "num_runs": o["sweep_runs"]})
        sweep = perf.sensitivity_sweep(base, [0.3, 0.4, 0.5], [10, 20, 30], seed)
        report["sensitivity"] = [
            {"std_factor": r.std_factor, "tx_per_block": r.tx_per_block,
             "tps_global": r.result.tps_global, "mean_global": r.result.mean_global,
             "band_per_shard": list(r.result.band_per_shard), "band_global": list(r.result.band_global)}
            for r in sweep]
        artifacts["sensitivity.csv"] = _csv([
            {"std_factor": r["std_factor"], "tx_per_block": r["tx_per_block"], "tps_global": r["tps_global"],
             "band_global_lo": r["band_global"][0], "band_global_hi": r["band_global"][1]}
            for r in report["sensitivity"]])
        figures["sensitivity.png"] = lambda p: plots.sensitivity_figure(sweep, p)
    return Outcome(report, artifacts, figures)


def _perf_latency(o: dict, seed: int) -> Outcome:
    params = perf.LatencyParams(cross_shard_fraction=o["cross_shard_fraction"],
                                jitter_std_fraction=o["jitter_std_fraction"])
    rep = perf.latency_model(params, o["samples"], seed)
    csv_bytes = "latency_s\n".encode() + "".join(f"{x!r}\n" for x in rep.samples.tolist()).encode()
    return Outcome(rep.to_dict(), {"samples.csv": csv_bytes},
                   {"latency.png": lambda p: plots.latency_figure(rep, p)})


_RETAINED = {"reference": perf.REFERENCE_RETAINED_BYTES_PER_TX, "physical": perf.PHYSICAL_RETAINED_BYTES_PER_TX}


def _perf_storage(o: dict, seed: int) -> Outcome:
    retained = o["retained_bytes_per_tx"]
    if retained is None:
        if o["preset"] not in _RETAINED:
            raise UsageError(f"unknown storage preset {o['preset']!r}")
        retained = _RETAINED[o["preset"]]
    rep = perf.storage_model(o["tx_per_day_per_shard"], o["shard_count"], retained, o["compression_ratio"])
    return Outcome({**rep.to_dict(), "preset": o["preset"] if o["retained_bytes_per_tx"] is None else "custom"})


def _attack_cost(o: dict, seed: int) -> Outcome:
    params = ConsensusParams(alpha_weight=o["alpha"], fee_rate=o["fee_rate"])
    rep = attack_cost(o["total_stake"], params, o["delta"], o["block_reward"])
    return Outcome(rep.to_dict())


def _ledger_demo(o: dict, seed: int) -> Outcome:
    oracle = Oracle.from_seed(f"ledger-demo/{seed}".encode())
    alice, bob = Wallet.from_seed(b"alice%d" % seed), Wallet.from_seed(b"bob%d" % seed)
    note = alice.fresh_key(b"deposit")
    ledger, _ = oracle.deposit(LedgerState(), o["deposit"], note)
    alice.receive(note)
    start = ledger.copy()
    tr = pay(ledger, alice, bob.public_key, o["amount"])
    ledger = apply_transaction(ledger, tr.tx)
    bob.receive(tr.notes[0])
    replay = validate_transaction(ledger, tr.tx)
    coin = alice.tokens(start)[0]
    forged = build_transfer(start, alice, bob.public_key, [coin.token_id], [coin.value + 1], 0,
                            adversarial=True)
    imbalance = validate_transaction(start, forged.tx)
    ledger.audit()
    return Outcome({
        "deposit": o["deposit"], "amount": o["amount"], "fee": tr.tx.fee,
        "balances": {"alice": alice.balance(ledger), "bob": bob.balance(ledger)},
        "total_supply": ledger.total_supply, "fees_burned": ledger.fees_burned,
        "replayed_transfer": replay.category.value, "inflating_transfer": imbalance.category.value,
        "tx_wire_bytes": tr.tx.wire_size(),
        "profiles": {p.name: {"public_key_bytes": p.public_key_bytes, "signature_bytes": p.signature_bytes}
                     for p in crypto.PROFILES.values()},
        "issuance_trail_ok": oracle.trail.verify(),
    })


def _offline_demo(o: dict, seed: int) -> Outcome:
    oracle = Oracle.from_seed(f"offline-demo/{seed}".encode())
    alice = DeviceState.new("alice", b"alice%d" % seed)
    bob, carol = DeviceState.new("bob", b"bob%d" % seed), DeviceState.new("carol", b"carol%d" % seed)
    ledger, _ = oracle.deposit(LedgerState(), o["amount"] + o["amount"] // 1000 + 1, alice.identity)
    alice = alice.sync(ledger)
    tier = TIERS[o["tier"]]
    a1, bob, v1 = offline_transfer(alice, bob, o["amount"], tier)
    # alice replays her pre-payment state to pay carol with the same coins
    _, carol, v2 = offline_transfer(alice, carol, o["amount"], tier)
    frames = encode_voucher(v1, Transport.QR)
    assert decode_voucher(frames, Transport.QR) == v1
    bob, ledger, r1 = reconcile(bob, ledger)
    carol, ledger, r2 = reconcile(carol, ledger)
    ledger.audit()
    return Outcome({
        "amount": o["amount"], "tier": tier.level, "tier_limit": tier.per_tx_limit,
        "voucher_bytes": len(v1.to_bytes()), "qr_frames": len(frames),
        "first_sync": {"applied": len(r1.applied), "conflicts": [c for _, c in r1.conflicts]},
        "second_sync": {"applied": len(r2.applied), "conflicts": [c for _, c in r2.conflicts]},
        "balances": {"bob": bob.balance(), "carol": carol.balance()},
        "total_supply": ledger.total_supply,
    })


SCENARIOS: dict[str, Scenario] = {s.name: s for s in (
    Scenario("simulate", {"shards": _int, "validators": _int, "blocks": _int, "users_per_shard": _int,
                          "payments_per_block": _int, "swaps_per_block": _int, "block_time_s": _float,
                          "loss_probability": _float, "jitter_fraction": _float, "tx_per_block": _int},
             {"shards": 4, "validators": 16, "blocks": 100, "users_per_shard": 6, "payments_per_block": 6,
              "swaps_per_block": 1, "block_time_s": 10.0, "loss_probability": 0.0, "jitter_fraction": 0.0,
              "tx_per_block": 20},
             _simulate),
    Scenario("perf-throughput", {"runs": _int, "mode": lambda v: perf.CorrelationMode(v).value, "std_factor": _float, "tx_per_block": _int,
                                 "shard_count": _int, "block_time_s": _float,
                                 "cross_shard_reduction": _float, "sweep": _bool, "sweep_runs": _int},
             {"runs": 1000, "mode": "independent", "std_factor": 0.3, "tx_per_block": 20, "shard_count": 256,
              "block_time_s": 10.0, "cross_shard_reduction": 0.85, "sweep": False,
              "sweep_runs": perf.SWEEP_RUNS},
             _perf_throughput),
    Scenario("perf-latency", {"samples": _int, "cross_shard_fraction": _optional_float,
                              "jitter_std_fraction": _float},
             {"samples": 100_000, "cross_shard_fraction": None, "jitter_std_fraction": 0.4},
             _perf_latency),
    Scenario("perf-storage", {"tx_per_day_per_shard": _float, "shard_count": _int,
                              "retained_bytes_per_tx": _optional_float, "compression_ratio": _float,
                              "preset": str},
             {"tx_per_day_per_shard": 1e6, "shard_count": 256, "retained_bytes_per_tx": None,
              "compression_ratio": perf.REFERENCE_COMPRESSION_RATIO, "preset": "reference"},
             _perf_storage),
    Scenario("attack-cost", {"total_stake": _int, "alpha": _fraction, "fee_rate": _fraction,
                             "delta": _fraction, "block_reward": _int},
             {"total_stake": 100_000_000, "alpha": Fraction(1, 2), "fee_rate": Fraction(1, 10_000),
              "delta": Fraction(1, 100), "block_reward": 5_000},
             _attack_cost),
    Scenario("ledger-demo", {"deposit": _int, "amount": _int}, {"deposit": 1_000_000, "amount": 250_000},
             _ledger_demo),
    Scenario("offline-demo", {"amount": _int, "tier": _int}, {"amount": 20_000, "tier": 0}, _offline_demo),
)}


# -- run config ------------------------------------------------------------

RUN_CONFIG_KEYS = {"scenario", "seed", "overrides", "format"}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    return v


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    seed: int = DEFAULT_SEED
    overrides: dict = field(default_factory=dict)
    format: Format = Format.JSON

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if not isinstance(d, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(d) - RUN_CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if "scenario" not in d:
            raise UsageError("config needs a scenario")
        try:
            fmt = Format(d.get("format", "json"))
        except ValueError:
            raise UsageError(f"unknown format {d.get('format')!r}") from None
        seed = d.get("seed", DEFAULT_SEED)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        return cls(d["scenario"], seed, dict(d.get("overrides") or {}), fmt).resolved()

    def resolved(self) -> RunConfig:
        """Validate overrides against the scenario schema and fill defaults."""
        sc = SCENARIOS.get(self.scenario)
        if sc is None:
            raise UsageError(f"unknown scenario {self.scenario!r}")
        unknown = set(self.overrides) - set(sc.schema)
        if unknown:
            raise UsageError(f"unknown {self.scenario} keys: {sorted(unknown)}")
        values = dict(sc.defaults)
        for k, v in self.overrides.items():
            if isinstance(v, str) and sc.schema[k] is not str:
                try:
                    v = json.loads(v)
                except json.JSONDecodeError:
                    pass
            try:
                values[k] = sc.schema[k](v) if v is not None else None
            except (TypeError, ValueError) as e:
                raise UsageError(f"bad value for {k}: {v!r} ({e})") from None
        return RunConfig(self.scenario, self.seed, values, self.format)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "format": self.format.value,
                "overrides": {k: _jsonable(v) for k, v in sorted(self.overrides.items())}}

    def digest(self) -> str:
        return hashlib.sha3_256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


# -- rendering -------------------------------------------------------------

def _flatten(d: dict, prefix: str = "") -> list[tuple[str, Any]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            for i, x in enumerate(v):
                out.extend(_flatten(x, f"{key}.{i}."))
        else:
            out.append((key, json.dumps(v) if isinstance(v, (list, tuple)) else v))
    return out


def render(report: dict, fmt: Format) -> str:
    if fmt is Format.JSON:
        return json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n"
    rows = _flatten(report)
    if fmt is Format.CSV:
        return _csv([{"key": k, "value": v} for k, v in rows]).decode()
    return "".join(f"{k}: {v}\n" for k, v in rows)


def _sha3(data: bytes) -> str:
    return hashlib.sha3_256(data).hexdigest()


def execute(cfg: RunConfig, out_dir: Path | None, figures: bool = True) -> tuple[dict, dict[str, str]]:
    """Run a resolved config; returns the full report and the hashes of written files."""
    sc = SCENARIOS[cfg.scenario]
    outcome = sc.execute(cfg.overrides, cfg.seed)
    report = {"run": cfg.to_dict(), "config_sha3": cfg.digest(), "result": outcome.report}
    written: dict[str, str] = {}
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        files = {f"report.{ 'txt' if cfg.format is Format.TEXT else cfg.format.value}":
                 render(report, cfg.format).encode(), **outcome.artifacts}
        for name, data in files.items():
            (out_dir / name).write_bytes(data)
            written[name] = _sha3(data)
        if figures:
            for name, draw in outcome.figures.items():
                draw(out_dir / name)
                written[name] = _sha3((out_dir / name).read_bytes())
        manifest = {"run": cfg.to_dict(), "config_sha3": cfg.digest(), "seed": cfg.seed,
                    "files": dict(sorted(written.items()))}
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return report, written


# -- argument parsing --------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run config (scenario, seed, overrides, format)")
    p.add_argument("--seed", type=int, help=f"64-bit seed (default {DEFAULT_SEED})")
    p.add_argument("--out", type=Path, help="output directory for reports, artifacts and figures")
    p.add_argument("--format", choices=[f.value for f in Format], help="report format (default json)")
    p.add_argument("--no-figures", action="store_true", help="skip rendering figures")
    p.add_argument("-v", "--verbose", action="store_true")


def _opt(p, name, dest, help_=None, **kw):
    p.add_argument(name, dest=f"ov_{dest}", default=None, help=help_, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrpl", description="Sharded private ledger simulator and models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the seeded discrete-event network simulation")
    _common(p)
    for flag, dest in [("--shards", "shards"), ("--validators", "validators"), ("--blocks", "blocks"),
                       ("--users-per-shard", "users_per_shard"), ("--payments-per-block", "payments_per_block"),
                       ("--swaps-per-block", "swaps_per_block"), ("--block-time", "block_time_s"),
                       ("--loss", "loss_probability"), ("--jitter", "jitter_fraction"),
                       ("--tx-per-block", "tx_per_block")]:
        _opt(p, flag, dest)

    pp = sub.add_parser("perf", help="performance models")
    psub = pp.add_subparsers(dest="perf_command", required=True)
    p = psub.add_parser("throughput", help="closed-form and Monte Carlo throughput")
    _common(p)
    for flag, dest in [("--runs", "runs"), ("--mode", "mode"), ("--std-factor", "std_factor"),
                       ("--tx-per-block", "tx_per_block"), ("--shard-count", "shard_count"),
                       ("--block-time", "block_time_s"), ("--cross-shard-reduction", "cross_shard_reduction"),
                       ("--sweep-runs", "sweep_runs")]:
        _opt(p, flag, dest)
    p.add_argument("--sweep", dest="ov_sweep", action="store_const", const=True, default=None,
                   help="add the std_factor x tx_per_block sensitivity grid")
    p = psub.add_parser("latency", help="Monte Carlo transaction latency")
    _common(p)
    for flag, dest in [("--samples", "samples"), ("--cross-shard-fraction", "cross_shard_fraction"),
                       ("--jitter", "jitter_std_fraction")]:
        _opt(p, flag, dest)
    p = psub.add_parser("storage", help="storage growth arithmetic")
    _common(p)
    for flag, dest in [("--tx-per-day", "tx_per_day_per_shard"), ("--shard-count", "shard_count"),
                       ("--retained-bytes", "retained_bytes_per_tx"),
                       ("--compression-ratio", "compression_ratio"), ("--preset", "preset")]:
        _opt(p, flag, dest)

    p = sub.add_parser("attack-cost", help="cost of buying weight with sham activity")
    _common(p)
    for flag, dest in [("--total-stake", "total_stake"), ("--alpha", "alpha"), ("--fee-rate", "fee_rate"),
                       ("--delta", "delta"), ("--block-reward", "block_reward")]:
        _opt(p, flag, dest)

    p = sub.add_parser("ledger-demo", help="mint, pay, replay and inflation attempts on one ledger")
    _common(p)
    _opt(p, "--deposit", "deposit")
    _opt(p, "--amount", "amount")

    p = sub.add_parser("offline-demo", help="offline vouchers with a double-spend conflict")
    _common(p)
    _opt(p, "--amount", "amount")
    _opt(p, "--tier", "tier")

    p = sub.add_parser("run", help="run a JSON config file")
    _common(p)
    p = sub.add_parser("replay", help="rerun a manifest and compare output hashes")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, help="directory for the rerun (default: alongside the manifest)")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _scenario_name(args) -> str | None:
    if args.command == "perf":
        return f"perf-{args.perf_command}"
    if args.command in ("run", "replay"):
        return None
    return args.command


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def config_from_args(args) -> RunConfig:
    base: dict = _load_json(args.config) if getattr(args, "config", None) else {}
    if not isinstance(base, dict):
        raise UsageError("config must be a JSON object")
    name = _scenario_name(args)
    if name is not None:
        if base.get("scenario", name) != name:
            raise UsageError(f"config scenario {base['scenario']!r} does not match command {name!r}")
        base = {**base, "scenario": name}
    overrides = dict(base.get("overrides") or {})
    overrides.update({k[3:]: v for k, v in vars(args).items() if k.startswith("ov_") and v is not None})
    d = {**base, "overrides": overrides}
    if args.seed is not None:
        d["seed"] = args.seed
    if args.format is not None:
        d["format"] = args.format
    return RunConfig.from_dict(d)


def _fail(code: int, reason: str, detail: Any = None) -> int:
    sys.stderr.write(json.dumps({"status": "error", "reason": reason, "detail": detail}, default=str) + "\n")
    return code


def _replay(args) -> int:
    manifest = _load_json(args.manifest)
    if not isinstance(manifest, dict) or "run" not in manifest or "files" not in manifest:
        raise UsageError("not a run manifest")
    cfg = RunConfig.from_dict(manifest["run"])
    if cfg.digest() != manifest.get("config_sha3"):
        raise UsageError("manifest config hash does not match its config")
    out = args.out or args.manifest.parent / "replay"
    figures = any(n.endswith(".png") for n in manifest["files"])
    _, written = execute(cfg, out, figures=figures)
    mismatched = sorted(n for n, h in manifest["files"].items() if written.get(n) != h)
    if mismatched:
        return _fail(EXIT_FAILURE, "replay_mismatch", mismatched)
    sys.stdout.write(json.dumps({"status": "ok", "replayed": sorted(written)}) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            return _replay(args)
        if args.command == "run" and args.config is None:
            raise UsageError("run needs --config")
        cfg = config_from_args(args)
        report, _ = execute(cfg, args.out, figures=not args.no_figures)
    except UsageError as e:
        return _fail(EXIT_USAGE, "usage", str(e))
    except (ConfigurationError, DomainError) as e:
        return _fail(EXIT_USAGE, "configuration", str(e))
    except ScenarioFailure as e:
        return _fail(EXIT_FAILURE, e.reason, e.detail)
    except (QRPLError, ValueError, ArithmeticError) as e:
        return _fail(EXIT_FAILURE, type(e).__name__, str(e))
    sys.stdout.write(render(report, cfg.format))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
