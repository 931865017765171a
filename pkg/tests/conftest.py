from __future__ import annotations

import pytest

from qrpl.issuance import Oracle
from qrpl.ledger import LedgerState, Wallet


@pytest.fixture
def oracle() -> Oracle:
    return Oracle.from_seed(b"test-oracle")


@pytest.fixture
def funded(oracle):
    """Alice holds one 1_000_000 token, Bob holds nothing."""
    alice, bob = Wallet.from_seed(b"alice"), Wallet.from_seed(b"bob")
    ledger, _ = oracle.deposit(LedgerState(), 1_000_000, alice.fresh_key(b"genesis"))
    return ledger, alice, bob


def fund(oracle: Oracle, ledger: LedgerState, wallet: Wallet, *values: int, tag: bytes = b"") -> LedgerState:
    for i, v in enumerate(values):
        ledger, _ = oracle.deposit(ledger, v, wallet.fresh_key(tag + b"/%d" % i))
    return ledger


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def record_criterion(cid: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
