import json
import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rnft.errors import CountShapeMismatch, InvalidParams, InvalidWeights, SigmaOutOfRange, StepTooLarge
from rnft.graph import BlockCoords, ReferenceGraph
from rnft.incentive import (
    MINOR_UNITS,
    IncentiveParams,
    WeightVector,
    allocate_largest_remainder,
    descending_rate,
    hessian_probe,
    income,
    income_of,
    initial_price,
    interest_rate,
    outcome,
    outcome_closed_form,
    outcome_of,
    payment_depth,
    payoff,
    payoff_of,
    utility,
)

from oracles import expanded_outcome, largest_remainder_oracle


def P(**kw):
    return IncentiveParams(**kw)


# -- rates ------------------------------------------------------------------


def test_interest_rate():
    assert interest_rate(P(alpha=0.9), WeightVector.original()) == 0.0
    assert interest_rate(P(alpha=0.0), WeightVector(0.2, (0.4, 0.4))) == 0.0
    assert interest_rate(P(alpha=0.5), WeightVector(0.4, (0.3, 0.3))) == pytest.approx(0.3, abs=1e-15)


def test_descending_rate():
    assert descending_rate(P(beta=1.5), WeightVector(0.5, (0.5,))) == 0.5
    assert descending_rate(P(beta=1.0), WeightVector(0.0, (1.0,))) == 1.0
    with pytest.raises(SigmaOutOfRange):
        descending_rate(P(beta=0.2), WeightVector(0.5, (0.5,)))


@pytest.mark.parametrize("g, lam, d", [(4, 1.0, 0), (4, 0.5, 2), (4, 0.9, 1), (10, 0.0, 10), (7.9, 0.5, 3)])
def test_payment_depth(g, lam, d):
    assert payment_depth(P(g=g, lam=lam)) == d


def test_param_validation_and_json(tmp_path):
    with pytest.raises(InvalidParams):
        P(o_hat=0)
    with pytest.raises(InvalidParams):
        P(lam=1.5)
    with pytest.raises(InvalidParams):
        P(beta=0)
    path = tmp_path / "params.json"
    path.write_text(json.dumps({"O_hat": 100, "lambda": 0.5, "alpha": 0, "beta": 2, "g": 4, "k_scale": 10}))
    p = IncentiveParams.load(path)
    assert p == P(o_hat=100, lam=0.5, alpha=0, beta=2, g=4, k_scale=10)
    assert IncentiveParams.from_dict(p.to_dict()) == p
    with pytest.raises(InvalidParams):
        IncentiveParams.from_dict({"lamda": 0.5})


def test_weight_vector_validation():
    with pytest.raises(InvalidWeights):
        WeightVector(0.5, (0.1,))
    with pytest.raises(InvalidWeights):
        WeightVector(1.2, (-0.2,))
    assert WeightVector.from_profit_sharing([0.25, 0.25]).w0 == 0.5
    assert WeightVector.from_profit_sharing([]).w0 == 1.0


# -- settlement -------------------------------------------------------------


def test_initial_price_shares():
    p0, shares = initial_price(P(o_hat=100), WeightVector.original())
    assert (p0, shares) == (100, [100 * MINOR_UNITS])
    _, shares = initial_price(P(o_hat=100), WeightVector(0.4, (0.3, 0.3)))
    assert shares == [40 * MINOR_UNITS, 30 * MINOR_UNITS, 30 * MINOR_UNITS]


def test_initial_price_thirds():
    third = 1 / 3
    _, shares = initial_price(P(o_hat=100), WeightVector(third, (third, third)))
    assert sum(shares) == 100 * MINOR_UNITS
    assert shares == largest_remainder_oracle(100 * MINOR_UNITS, [third] * 3)
    assert sorted(shares) == [33_333_333, 33_333_333, 33_333_334]


def test_largest_remainder_small_cases():
    assert allocate_largest_remainder(10, [1, 1, 1]) == [4, 3, 3]
    assert allocate_largest_remainder(7, [0.5, 0.5]) == [4, 3]
    assert allocate_largest_remainder(0, [0.2, 0.8]) == [0, 0]
    with pytest.raises(InvalidWeights):
        allocate_largest_remainder(5, [0, 0])


@settings(max_examples=200)
@given(
    st.integers(min_value=0, max_value=10**9),
    st.lists(st.floats(min_value=0, max_value=1, allow_nan=False), min_size=1, max_size=8),
)
def test_largest_remainder_matches_oracle(total, weights):
    assume(sum(weights) > 0)
    shares = allocate_largest_remainder(total, weights)
    assert sum(shares) == total
    assert shares == largest_remainder_oracle(total, weights)
    exact = [Fraction(w) * total / sum(Fraction(x) for x in weights) for w in weights]
    assert all(abs(s - q) < 1 for s, q in zip(shares, exact))


# -- outcome / income ---------------------------------------------------------


def test_outcome_examples():
    assert outcome_of(P(lam=1.0, o_hat=100), WeightVector.original()) == 100
    assert outcome(100, 0.5, 2, 0.1) == pytest.approx(107.75, rel=1e-15)
    assert outcome_closed_form(100, 0.5, 2, 0.1) == pytest.approx(107.75, rel=1e-14)
    assert expanded_outcome(100, 0.5, 2, Fraction(1, 10)) == Fraction(43100, 400)


@settings(max_examples=300)
@given(
    st.floats(min_value=0, max_value=1),
    st.integers(min_value=1, max_value=60),
    st.floats(min_value=0.01, max_value=1e6),
)
def test_zero_interest_conserves_price(lam, d, p0):
    assert outcome(p0, lam, d, 0.0) == p0
    assert outcome_closed_form(p0, lam, d, 0.0) == p0
    assert expanded_outcome(p0, lam, d, 0) == Fraction(p0)


@settings(max_examples=300)
@given(
    st.floats(min_value=0, max_value=1),
    st.integers(min_value=1, max_value=60),
    st.floats(min_value=1e-6, max_value=1),
    st.floats(min_value=0.01, max_value=1e6),
)
def test_outcome_matches_exact_expansion(lam, d, r, p0):
    exact = float(expanded_outcome(p0, lam, d, r))
    assert outcome(p0, lam, d, r) == pytest.approx(exact, rel=1e-13)
    assert outcome_closed_form(p0, lam, d, r) == pytest.approx(exact, rel=1e-12)


def test_income_examples():
    assert income(10, 0.5, [4, 2]) == ([20.0, 5.0], 25.0)
    assert income(10, 0.5, [0, 0]) == ([0.0, 0.0], 0.0)
    assert income_of(P(lam=1.0), WeightVector.original(), []) == ([], 0.0)
    with pytest.raises(CountShapeMismatch):
        income_of(P(lam=0.5, g=4), WeightVector.original(), [1])


@settings(max_examples=200)
@given(
    st.floats(min_value=0.01, max_value=100),
    st.floats(min_value=0.01, max_value=0.99),
    st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=10),
    st.integers(min_value=0, max_value=9),
)
def test_income_linear_and_monotone(k, sigma, counts, pos):
    pos %= len(counts)
    base = income(k, sigma, counts)[0]
    bumped = list(counts)
    bumped[pos] += 3
    delta = income(k, sigma, bumped)[0][pos] - base[pos]
    assert delta == pytest.approx(3 * k * sigma ** (pos + 1), rel=1e-12)
    assert income(k, min(1.0, sigma * 1.01), counts)[1] >= income(k, sigma, counts)[1]


# -- payoff ---------------------------------------------------------------


def test_payoff_original_pure_cost():
    b = payoff(P(lam=1.0, o_hat=100), WeightVector.original(), [])
    assert (b.d, b.income, b.outcome, b.utility) == (0, 0.0, 100.0, -100.0)


def test_payoff_of_intro_token_a(intro):
    chain, ids = intro
    params = P(o_hat=100, lam=0.5, g=4, alpha=0.0, beta=2.0, k_scale=10)
    b = payoff_of(chain.graph, ids["A"], params)
    assert b.d == 2 and b.referrer_counts == (1, 1)
    assert b.sigma == pytest.approx(1 / 3, rel=1e-15)
    assert b.r == 0.0 and b.outcome == 100.0
    exact = Fraction(10) * Fraction(1, 3) + Fraction(10) * Fraction(1, 9) - 100
    assert exact == Fraction(-860, 9)
    assert b.utility == pytest.approx(float(exact), rel=1e-14)
    assert b.utility == b.income - b.outcome
    assert b.income == math.fsum(b.income_schedule)


def test_payoff_uses_profit_sharing_weights():
    g = ReferenceGraph()
    a = g.safe_mint(b"a" * 20, at=BlockCoords(1, 1, 0))
    x = g.safe_mint(b"b" * 20, [a], [0.6], at=BlockCoords(2, 2, 0))
    params = P(o_hat=50, lam=0.25, g=4, alpha=0.5, beta=1.0, k_scale=2)
    b = payoff_of(g, x, params)
    assert b.r == pytest.approx(0.3)
    assert b.sigma == pytest.approx(1 / 1.4)
    assert b.d == 3 and b.referrer_counts == (0, 0, 0)
    assert b.utility == pytest.approx(-float(expanded_outcome(50, 0.25, 3, 0.5 * 0.6)), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=0, max_value=0.9),
    st.floats(min_value=1.5, max_value=20),
    st.floats(min_value=0.1, max_value=1),
    st.floats(min_value=0.1, max_value=50),
    st.data(),
)
def test_doubling_counts_increases_utility(lam, g, w0, k, data):
    params = P(o_hat=100, lam=lam, g=g, alpha=0.5, beta=1.0, k_scale=k)
    d = payment_depth(params)
    assume(d >= 1)
    counts = data.draw(st.lists(st.integers(0, 20), min_size=d, max_size=d))
    assume(any(counts))
    weights = WeightVector(w0, (1 - w0,)) if w0 < 1 else WeightVector.original()
    before = payoff(params, weights, counts).utility
    after = payoff(params, weights, [2 * c for c in counts]).utility
    assert after > before


# -- hessian probe -----------------------------------------------------------


def test_hessian_worked_example():
    params = P(o_hat=100, lam=0.5, g=4, k_scale=10)
    probe = hessian_probe(params, WeightVector.original(), [5, 5], sigma=0.5, r=0.1)
    assert probe.A == 100 and probe.B == 0 and probe.C == -50
    assert probe.det == -5000
    assert probe.classification == "non-convex"
    assert probe.fd_A == pytest.approx(100, rel=1e-6)
    assert probe.fd_C == pytest.approx(-50, rel=1e-6)
    assert abs(probe.fd_B) <= 1e-6


def test_hessian_depth_one_is_degenerate():
    params = P(o_hat=100, lam=0.5, g=2, k_scale=10)
    assert payment_depth(params) == 1
    probe = hessian_probe(params, WeightVector.original(), [7], sigma=0.5, r=0.1)
    assert (probe.A, probe.B, probe.C, probe.det) == (0, 0, 0, 0)
    assert probe.classification == "degenerate"


def test_hessian_uses_derived_coordinates_by_default():
    params = P(o_hat=100, lam=0.2, g=5, alpha=0.5, beta=1.5, k_scale=3)
    w = WeightVector(0.5, (0.5,))
    probe = hessian_probe(params, w, [1, 2, 3, 4])
    assert probe.sigma == 0.5 and probe.r == 0.25
    assert probe.det < 0


def test_hessian_step_too_large():
    params = P(o_hat=100, lam=0.0, g=30, k_scale=10)
    with pytest.raises(StepTooLarge):
        hessian_probe(params, WeightVector.original(), [1] * 30, step=0.05, sigma=0.5, r=0.1)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=0, max_value=0.9),
    st.integers(min_value=2, max_value=12),
    st.floats(min_value=0.05, max_value=0.95),
    st.floats(min_value=0.01, max_value=0.95),
    st.data(),
)
def test_hessian_sign_structure(lam, d, sigma, r, data):
    params = P(o_hat=100, lam=lam, g=(d + 0.5) / (1 - lam), k_scale=5)
    assume(payment_depth(params) == d)
    counts = data.draw(st.lists(st.integers(0, 30), min_size=d, max_size=d))
    assume(any(counts))
    probe = hessian_probe(params, WeightVector.original(), counts, sigma=sigma, r=r)
    assert probe.A >= 0 and probe.C < 0 and probe.B == 0
    if any(counts[1:]):
        assert probe.det < 0 and probe.classification == "non-convex"


def test_utility_direction_in_r():
    kw = dict(p0=100, lam=0.3, d=3, k=5, counts=[1, 2, 3])
    assert utility(0.5, 0.2, **kw) < utility(0.5, 0.1, **kw)
