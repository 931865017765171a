"""Sharded, privacy-preserving payment ledger: library, simulator and performance models."""
from .consensus import ConsensusParams, Validator, attack_cost, compute_weight, select_proposer, slash
from .crypto import DILITHIUM2, ECDSA_P256, FALCON512, PROFILES, SchemeProfile
from .errors import QRPLError
from .ledger import LedgerState, Transaction, UtxoToken, Verdict, Wallet, apply_transaction, validate_transaction
from .perf import LatencyParams, ThroughputParams, latency_model, storage_model, throughput_model
from .simulator import SimConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "ConsensusParams", "Validator", "attack_cost", "compute_weight", "select_proposer", "slash",
    "DILITHIUM2", "ECDSA_P256", "FALCON512", "PROFILES", "SchemeProfile", "QRPLError",
    "LedgerState", "Transaction", "UtxoToken", "Verdict", "Wallet", "apply_transaction",
    "validate_transaction", "LatencyParams", "ThroughputParams", "latency_model", "storage_model",
    "throughput_model", "SimConfig", "simulate",
]
