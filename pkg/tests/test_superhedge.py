from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frictionlab.market import value
from frictionlab.superhedge import (CpsLp, direction_consistent, frictionless_price,
                                    hedge_slack, omega_star, oracle_price, price,
                                    superhedge)

from conftest import fixture_market, small_markets

F = Fraction


def test_binomial_worked_example(binomial):
    sol = superhedge(binomial, binomial.claim("g"))
    assert sol.price == F(3, 4)
    assert sol.xbar0 == (F(4),)
    assert sol.strategy == {"root": (F(1, 4),)}
    assert sol.S == {"root": (F(4),), "u": (F(5),), "d": (F(1),)}
    assert sol.gap == 0
    assert sol.omega_star.leaves == ("u", "d")
    assert {l: sol.price + v for l, v in value(binomial, sol.strategy).items()} == {"u": 1, "d": 0}


def test_frictionless_price_along_the_extracted_process(binomial):
    sol = superhedge(binomial, binomial.claim("g"))
    assert frictionless_price(binomial, sol.S, sol.claim) == F(3, 4)


def test_zero_claim_costs_nothing(binomial):
    sol = superhedge(binomial, binomial.claim("zero"))
    assert sol.price == 0 and sol.gap == 0


def test_constant_box_prices_a_constant_claim_at_its_value():
    m = fixture_market("constant-box")
    sol = superhedge(m, m.claim())
    assert sol.price == 7 and sol.gap == 0


def test_two_assets():
    m = fixture_market("two-asset")
    sol = superhedge(m, m.claim())
    assert sol.price == F(7, 4) and sol.gap == 0
    assert all(s >= 0 for l, s in hedge_slack(m, sol).items() if l in sol.omega_star)


def test_efficient_support_can_exclude_a_subtree():
    m = fixture_market("one-subtree")
    sol = superhedge(m, m.claim())
    assert sol.omega_star.leaves == ("ba", "bb")
    assert sol.price == 0 and sol.gap == 0
    assert "aa" not in sol.omega_star


@pytest.mark.parametrize("name", ["single-path", "two-branch"])
def test_empty_efficient_support_means_no_finite_price(name):
    m = fixture_market(name)
    sol = superhedge(m, {l: F(1) for l in m.leaves})
    assert sol.price is None
    assert sol.omega_star.empty and sol.omega_star.farkas is not None
    assert not oracle_price(m, sol.claim).feasible


def test_cps_program_on_the_binomial_tree(binomial):
    lp = CpsLp.build(binomial)
    out_q = oracle_price(binomial, {"u": F(1), "d": F(0)})
    assert out_q.value == F(3, 4)
    assert out_q.prices["root"] == (F(4),)
    assert lp.num_vars == 3 * 2


@st.composite
def market_and_claim(draw):
    m = draw(small_markets())
    g = {l: F(draw(st.integers(-12, 12)), 4) for l in m.leaves}
    return m, g


@given(market_and_claim())
def test_price_equals_the_oracle(case):
    m, g = case
    sol = superhedge(m, g)
    if sol.omega_star.empty:
        assert sol.price is None
        return
    assert sol.price == sol.oracle.value
    slack = hedge_slack(m, sol)
    assert all(slack[l] >= 0 for l in sol.omega_star.leaves)
    assert direction_consistent(m, sol.S, sol.strategy)


@given(market_and_claim(), st.integers(-8, 8))
def test_price_is_translation_equivariant(case, c):
    m, g = case
    base, _ = price(m, g)
    shifted, _ = price(m, {l: v + F(c, 2) for l, v in g.items()})
    if base is None:
        assert shifted is None
    else:
        assert shifted == base + F(c, 2)


@given(small_markets())
def test_efficient_support_members_have_witnesses(m):
    om = omega_star(m)
    for l in om.leaves:
        assert om.witness_mass[l] > 0
