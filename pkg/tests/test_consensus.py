from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy import stats

from oracles import attack_figures, weight
from qrpl import crypto
from qrpl.consensus import (ConsensusParams, SlashReason, Validator, accrue_activity, adversary_ratios,
                            attack_cost, compute_weight, prove_activity, reset_activity, select_proposer,
                            selection_input, slash, verify_proposer_claim)
from qrpl.errors import DomainError, NoEligibleValidatorError

P = ConsensusParams()


def v(vid="v", stake=100, activity=0) -> Validator:
    return Validator(vid, stake, crypto.keypair_from_seed(vid.encode()), activity)


def test_weight_examples():
    assert compute_weight(v(stake=100)) == 100
    assert compute_weight(v(stake=100, activity=50)) == 125 == weight(100, 50, "0.5")
    assert isinstance(compute_weight(v(activity=3)), Fraction)


@given(st.integers(0, 10 ** 9), st.integers(0, 10 ** 9), st.integers(1, 10 ** 6),
       st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000)))
def test_weight_matches_oracle_and_is_monotone(stake, activity, bump, alpha):
    params = ConsensusParams(alpha_weight=alpha)
    assert compute_weight(v(stake=stake, activity=activity), params) == weight(stake, activity, alpha)
    assert compute_weight(v(stake=stake, activity=activity + bump), params) > \
        compute_weight(v(stake=stake, activity=activity), params)


def test_params_validated():
    with pytest.raises(DomainError):
        ConsensusParams(alpha_weight=0)
    with pytest.raises(DomainError):
        ConsensusParams(slash_penalty=1)
    assert ConsensusParams(fee_rate=0.0001).fee_rate == Fraction(1, 10_000)


def test_accrue_activity():
    val = v()
    proof = prove_activity("v", [3, 4])
    assert accrue_activity(val, 7, proof).activity == 7
    assert accrue_activity(val, 0, prove_activity("v", [])) == val
    assert accrue_activity(val, 8, proof) == val  # proof for a different total
    assert accrue_activity(val, 7, prove_activity("v", [3, 4], adversarial=True)) == val
    assert accrue_activity(val, 7, prove_activity("w", [3, 4])) == val
    assert reset_activity([accrue_activity(val, 7, proof)])[0].activity == 0


def test_two_million_fees_buy_one_percent():
    total = 100_000_000
    val = v(stake=0)
    after = accrue_activity(val, 2_000_000, prove_activity("v", [2_000_000]))
    assert (compute_weight(after) - compute_weight(val)) / total == Fraction(1, 100)


def test_single_validator_always_selected():
    only = [v("solo")]
    beacon = crypto.hash_bytes(b"b")
    assert all(select_proposer(only, beacon, r) == "solo" for r in range(50))


def test_selection_deterministic_and_verifiable():
    vals = [v(f"v{i}", stake=10 + i) for i in range(5)]
    beacon = crypto.hash_bytes(b"beacon")
    first = [select_proposer(vals, beacon, r) for r in range(20)]
    assert first == [select_proposer(list(reversed(vals)), beacon, r) for r in range(20)]
    winner = next(x for x in vals if x.id == first[0])
    claim = crypto.vrf_eval(winner.keypair, selection_input(beacon, 0))
    assert verify_proposer_claim(winner, beacon, 0, claim)


def test_zero_weight_validators_never_selected():
    with pytest.raises(NoEligibleValidatorError):
        select_proposer([v("a", stake=0)], crypto.hash_bytes(b""), 0)
    vals = [v("a", stake=0), v("b", stake=1)]
    assert {select_proposer(vals, crypto.hash_bytes(b"x"), r) for r in range(100)} == {"b"}


def test_selection_proportional_to_weight():
    vals = [v("light", stake=1), v("heavy", stake=3)]
    beacon = crypto.hash_bytes(b"proportional")
    n = 10 ** 5
    heavy = sum(select_proposer(vals, beacon, r) == "heavy" for r in range(n))
    sigma = (n * 0.75 * 0.25) ** 0.5
    assert abs(heavy - 0.75 * n) < 3 * sigma
    assert stats.chisquare([n - heavy, heavy], [0.25 * n, 0.75 * n]).pvalue > 0.001


def test_slash_examples():
    val = v(stake=1000)
    once, ev = slash(val)
    assert once.stake == 900 and (ev.stake_before, ev.stake_after) == (1000, 900)
    twice, _ = slash(once)
    assert twice.stake == 810
    zero, ev0 = slash(v(stake=0), reason=SlashReason.INVALID_BLOCK)
    assert zero.stake == 0 and ev0.noop


@given(st.integers(1, 10 ** 12), st.fractions(min_value=Fraction(1, 10 ** 6), max_value=Fraction(999_999, 10 ** 6)))
def test_slash_strictly_decreases(stake, penalty):
    after, _ = slash(v(stake=stake), ConsensusParams(slash_penalty=penalty))
    assert after.stake < stake
    assert after.stake == (stake * (1 - penalty)).__floor__()


def test_attack_cost_reference_figures():
    rep = attack_cost(100_000_000, P, Fraction(1, 100), 5_000)
    expect = attack_figures(100_000_000, "1/2", "1/10000", "1/100")
    assert rep.required_activity == expect["required_activity"] == 2_000_000
    assert rep.sham_volume == expect["sham_volume"] == 20_000_000_000
    assert rep.fee_cost == expect["fee_cost"] == 2_000_000
    assert rep.profitable is False
    assert rep.to_dict()["sham_volume"] == 20_000_000_000


def test_attack_cost_boundaries():
    rep = attack_cost(100_000_000, P, 0, 5_000)
    assert rep.fee_cost == 0 and rep.sham_volume == 0 and rep.profitable
    with pytest.raises(DomainError):
        attack_cost(100, P, 1, 0)


@given(st.integers(1, 10 ** 12), st.fractions(min_value=0, max_value=Fraction(99, 100)))
def test_attack_cost_matches_oracle(total, gain):
    rep = attack_cost(total, P, gain, 0)
    exp = attack_figures(total, "1/2", "1/10000", str(gain))
    assert (rep.required_activity, rep.sham_volume, rep.fee_cost) == \
        (exp["required_activity"], exp["sham_volume"], exp["fee_cost"])


def test_adversary_ratios():
    vals = [v("a", 33), v("b", 67)]
    r = adversary_ratios(vals, {"a"})
    assert r["stake_ratio"] == pytest.approx(0.33) and r["bound"] == pytest.approx(0.33)


def test_random_grid_weights_sum():
    rng = random.Random(5)
    vals = [v(f"v{i}", rng.randint(0, 100), rng.randint(0, 100)) for i in range(30)]
    assert sum(compute_weight(x) for x in vals) == sum(weight(x.stake, x.activity, "0.5") for x in vals)
