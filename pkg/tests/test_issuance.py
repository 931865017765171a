from __future__ import annotations

import random

import pytest

from oracles import Accounting
from qrpl import crypto
from qrpl.errors import DomainError, DoubleSpendError, ThresholdError
from qrpl.issuance import (AuditTrail, Oracle, OracleConfig, approve, count_approvals, mint, mint_message,
                           redeem, redeem_message)
from qrpl.ledger import LedgerState, Wallet, apply_transaction, pay


def test_deposit_mints_one_to_one(oracle):
    w = Wallet.from_seed(b"w")
    ledger, ev = oracle.deposit(LedgerState(), 100, w.fresh_key(b"d"))
    assert ledger.total_supply == 100 and w.balance(ledger) == 100
    assert ev.kind == "mint" and ev.fiat_amount == ev.tokens_minted == 100


def test_threshold_enforced():
    keys = [crypto.keypair_from_seed(b"s%d" % i) for i in range(3)]
    cfg = OracleConfig(tuple(k.public_key for k in keys), 2)
    trail, kp = AuditTrail(), crypto.keypair_from_seed(b"r")
    msg = mint_message(trail, 100, kp.public_key)
    with pytest.raises(ThresholdError):
        mint(cfg, LedgerState(), 100, [approve(keys[0], msg)], kp, trail)
    # the same signer twice still counts once; an outsider counts zero
    outsider = crypto.keypair_from_seed(b"x")
    assert count_approvals(cfg, msg, [approve(keys[0], msg)] * 2 + [approve(outsider, msg)]) == 1
    ledger, _ = mint(cfg, LedgerState(), 100, [approve(keys[0], msg), approve(keys[2], msg)], kp, trail)
    assert ledger.total_supply == 100 and len(trail) == 1


def test_approvals_bound_to_trail_position(oracle):
    kp = crypto.keypair_from_seed(b"r")
    msg = mint_message(oracle.trail, 100, kp.public_key)
    approvals = [approve(k, msg) for k in oracle.keys[:2]]
    ledger, _ = mint(oracle.config, LedgerState(), 100, approvals, kp, oracle.trail)
    with pytest.raises(ThresholdError):  # replaying the approvals for a second mint
        mint(oracle.config, ledger, 100, approvals, kp, oracle.trail)


def test_zero_mint_rejected(oracle):
    with pytest.raises(DomainError):
        oracle.deposit(LedgerState(), 0, crypto.keypair_from_seed(b"r"))


def test_config_validation():
    with pytest.raises(DomainError):
        OracleConfig((b"a" * 1312,), 2)
    with pytest.raises(DomainError):
        OracleConfig((b"a" * 1312,), 1, parity=(1, 2))


def test_mint_then_redeem_restores_supply(oracle):
    w = Wallet.from_seed(b"w")
    ledger, _ = oracle.deposit(LedgerState(), 100, w.fresh_key(b"d"))
    tok = w.tokens(ledger)[0]
    after, ev = oracle.withdraw(ledger, [tok.token_id])
    assert after.total_supply == 0 and ev.tokens_minted == -100
    with pytest.raises(DoubleSpendError):
        oracle.withdraw(after, [tok.token_id])
    assert oracle.trail.verify() and oracle.trail.net_issuance() == 0


def test_redeem_needs_threshold(oracle):
    w = Wallet.from_seed(b"w")
    ledger, _ = oracle.deposit(LedgerState(), 100, w.fresh_key(b"d"))
    tok = w.tokens(ledger)[0]
    msg = redeem_message(oracle.trail, [tok.token_id])
    with pytest.raises(ThresholdError):
        redeem(oracle.config, ledger, [tok.token_id], [approve(oracle.keys[0], msg)], oracle.trail)


def test_trail_is_hash_chained(oracle):
    w = Wallet.from_seed(b"w")
    ledger = LedgerState()
    for i in range(3):
        ledger, _ = oracle.deposit(ledger, 10 + i, w.fresh_key(b"%d" % i))
    trail = oracle.trail
    assert trail.verify()
    assert [e.prev_digest for e in trail][1:] == [e.digest for e in trail][:-1]
    assert len(trail.to_jsonl().splitlines()) == 3
    trail._events[1] = type(trail.events[1])(**{**trail.events[1].__dict__, "fiat_amount": 999})
    assert not trail.verify()


def test_randomised_mint_redeem_transfer_accounting():
    rng = random.Random(9)
    oracle = Oracle.from_seed(b"acct")
    wallets = [Wallet.from_seed(b"w%d" % i) for i in range(4)]
    book = Accounting()
    ledger = LedgerState()
    for step in range(300):
        op = rng.random()
        w = rng.choice(wallets)
        if op < 0.4 or ledger.total_supply == 0:
            amount = rng.randint(1, 100_000)
            ledger, _ = oracle.deposit(ledger, amount, w.fresh_key(b"%d" % step))
            book.minted += amount
        elif op < 0.6 and w.tokens(ledger):
            toks = w.tokens(ledger)
            chosen = rng.sample(toks, rng.randint(1, min(3, len(toks))))
            ledger, _ = oracle.withdraw(ledger, [t.token_id for t in chosen])
            book.redeemed += sum(t.value for t in chosen)
        elif w.balance(ledger) > 200:
            other = rng.choice([x for x in wallets if x is not w])
            tr = pay(ledger, w, other.public_key, rng.randint(1, w.balance(ledger) // 2),
                     fee=rng.randint(0, 5))
            ledger = apply_transaction(ledger, tr.tx)
            other.receive(tr.notes[0])
            w.receive(*tr.notes[1:])
            book.fees += tr.tx.fee
        ledger.audit()
        assert ledger.total_supply == book.supply()
    assert oracle.trail.net_issuance() == book.minted - book.redeemed
    assert oracle.trail.verify()
