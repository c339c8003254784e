from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frictionlab.market import (MarketError, exchange_matrix, frictionless_integral, from_dict,
                                in_minus_cone, loads, solvency_check, validate, value,
                                zero_strategy)

from conftest import fixture_market, small_markets

F = Fraction


def single(bid, ask):
    return {"assets": 1, "horizon": 0,
            "nodes": [{"id": "r", "parent": None, "bid": [bid], "ask": [ask]}]}


def test_single_path_fixture_is_accepted(single_path):
    assert validate(single_path.to_dict()).ok
    assert single_path.horizon == 2 and list(single_path.leaves) == ["t2"]


def test_zero_width_spread_is_rejected():
    rep = validate(single("2", "2"))
    assert not rep.ok
    assert "efficient friction" in rep.invariant


def test_first_violated_invariant_is_named():
    doc = {"assets": 1, "horizon": 2, "nodes": [
        {"id": "r", "parent": None, "bid": ["1"], "ask": ["2"]},
        {"id": "a", "parent": "r", "bid": ["1"], "ask": ["2"]}]}
    rep = validate(doc)
    assert not rep.ok and rep.invariant == "every leaf has depth T"
    doc["nodes"].append({"id": "b", "parent": "zz", "bid": ["1"], "ask": ["2"]})
    assert validate(doc).invariant == "parents exist"


def test_malformed_json_reports_the_line():
    with pytest.raises(MarketError, match="line 2"):
        loads('{"assets": 1,\n  oops}')


def test_json_numbers_are_read_exactly():
    m = loads('{"assets": 1, "horizon": 0, "nodes": '
              '[{"id": "r", "parent": null, "bid": [0.1], "ask": [0.3]}]}')
    assert m.nodes["r"].bid == (F(1, 10),)


def test_single_path_strategy_values(single_path):
    assert value(single_path, single_path.strategy("buy0-sell2")) == {"t2": F(1, 2)}
    assert value(single_path, single_path.strategy("buy0-sell1")) == {"t2": F(-1)}
    assert value(single_path, single_path.strategy("hold")) == {"t2": 0}


def test_frictionless_integral_telescopes(single_path):
    H = single_path.strategy("buy0-sell2")
    S = {"t0": (F(3),), "t1": (F(7, 2),), "t2": (F(7, 2),)}
    assert frictionless_integral(single_path, H, S) == {"t2": F(1, 2)}
    const = {n: (F(2),) for n in single_path.order}
    assert frictionless_integral(single_path, H, const) == {"t2": 0}


def test_exchange_matrix_in_numeraire_mode():
    m = fixture_market("two-asset")
    pi = exchange_matrix(m.nodes[m.root])
    node = m.nodes[m.root]
    assert pi[0][1] == node.ask[0]
    assert pi[1][0] == 1 / node.bid[0]
    assert pi[1][2] == node.ask[1] / node.bid[0]


def test_solvency_cone_membership():
    pi = ((F(1), F(3)), (F(1), F(1)))
    assert in_minus_cone((F(-3), F(1)), pi)       # pay 3, receive one share
    assert not in_minus_cone((F(0), F(1)), pi)    # a free share


def test_engine_strategies_are_self_financing(single_path):
    assert all(solvency_check(single_path, single_path.strategy("buy0-sell2")).values())


def test_leaf_positions_are_refused(single_path):
    doc = single_path.to_dict()
    doc["strategies"] = {"bad": {"t2": ["1"]}}
    with pytest.raises(MarketError, match="cannot carry a position"):
        from_dict(doc)


@st.composite
def market_strategy_prices(draw):
    m = draw(small_markets())
    H = {n: tuple(draw(st.integers(-6, 6)) * F(1, 2) for _ in range(m.d)) for n in m.internal}
    S = {}
    for n in m.order:
        node = m.nodes[n]
        S[n] = tuple(b + (a - b) * F(draw(st.integers(0, 8)), 8)
                     for b, a in zip(node.bid, node.ask))
    return m, H, S


@given(market_strategy_prices())
def test_value_is_dominated_by_every_frictionless_integral(case):
    m, H, S = case
    v, fi = value(m, H), frictionless_integral(m, H, S)
    assert all(v[l] <= fi[l] for l in m.leaves)


@given(small_markets())
def test_holding_nothing_is_worth_nothing(m):
    assert set(value(m, zero_strategy(m)).values()) == {0}


@given(small_markets())
def test_round_trip_through_json(m):
    again = loads(json.dumps(m.to_dict()))
    assert again.to_dict() == m.to_dict()
