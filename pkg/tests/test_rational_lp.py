from __future__ import annotations

import itertools
from dataclasses import replace
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from frictionlab.rational_lp import (INFEASIBLE, OPTIMAL, UNBOUNDED,
                                     LinearProgram, LpInputError, as_rational,
                                     feasibility, feasible_point, fmt, ge, le, eq,
                                     solve, verify, verify_farkas, verify_optimal)

from conftest import rationals


def test_single_binding_bound():
    out = solve(LinearProgram((1,), [ge([1], 2)], "min"))
    assert out.status == OPTIMAL
    assert out.x == (2,) and out.value == 2


def test_redundant_row_gets_zero_dual():
    out = solve(LinearProgram((1,), [le([1], 1), le([1], 3)], "max"))
    assert out.x == (1,)
    assert out.duals == (1, 0)


def test_two_leaf_cps_program():
    # variables: q_u, q_d, th_u, th_d, th_0
    rows = [
        eq([1, 1, 0, 0, 0], 1),
        eq([0, 0, 1, 1, -1], 0),
        ge([-5, 0, 1, 0, 0], 0), le([-6, 0, 1, 0, 0], 0),
        ge([0, -1, 0, 1, 0], 0), le([0, -2, 0, 1, 0], 0),
        ge([0, 0, 0, 0, 1], 2), le([0, 0, 0, 0, 1], 4),
    ]
    bounds = ((0, None), (0, None), (None, None), (None, None), (None, None))
    out = solve(LinearProgram((1, 0, 0, 0, 0), rows, "max", bounds))
    assert out.value == Fraction(3, 4)
    q_u, q_d, th_u, th_d, th_0 = out.x
    assert (th_0, th_u / q_u, th_d / q_d) == (4, 5, 1)


def test_contradictory_rows_give_farkas():
    lp = LinearProgram((0,), [ge([1], 1), le([1], 0)])
    out = solve(lp)
    assert out.status == INFEASIBLE
    assert verify_farkas(lp, out)
    assert out.farkas == (-1, 1)


def test_bounds_take_part_in_infeasibility():
    lp = LinearProgram((0, 0), [ge([1, 1], 5)], bounds=((0, 2), (0, 2)))
    out = solve(lp)
    assert out.status == INFEASIBLE
    assert verify(lp, out)


def test_unbounded_ray():
    lp = LinearProgram((1, 1), [ge([1, -1], 0)], "max", ((0, None), (0, None)))
    out = solve(lp)
    assert out.status == UNBOUNDED
    assert verify(lp, out)


def test_feasible_point_and_empty_system():
    x = feasible_point([ge([1, 1], 1), le([1, 0], 0)], 2)
    assert x is not None and x[0] + x[1] >= 1 and x[0] <= 0
    assert feasible_point([ge([1], 1), le([1], 0)], 1) is None
    assert feasibility([eq([1], 3)], 1).status == OPTIMAL


def test_floats_are_refused():
    with pytest.raises(TypeError):
        as_rational(0.1)
    with pytest.raises(TypeError):
        LinearProgram((1,), [le([0.5], 1)])


def test_parsing_and_formatting():
    assert as_rational("3/4") == Fraction(3, 4)
    assert as_rational("0.25") == Fraction(1, 4)
    assert as_rational(gmpy2.mpq(1, 3)) == Fraction(1, 3)
    assert fmt(Fraction(-6, 4)) == "-3/2"
    assert fmt(Fraction(4)) == "4"


def test_row_length_mismatch_is_an_input_error():
    with pytest.raises(LpInputError):
        LinearProgram((1, 2), [le([1], 1)])


@st.composite
def box_lps(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(1, 4))
    rows = []
    for _ in range(m):
        coeffs = draw(st.lists(rationals(-3, 3, 2), min_size=n, max_size=n))
        rel = draw(st.sampled_from(["<=", ">=", "=="]))
        rhs = draw(rationals(-4, 4, 2))
        rows.append({"<=": le, ">=": ge, "==": eq}[rel](coeffs, rhs))
    obj = draw(st.lists(rationals(-3, 3, 2), min_size=n, max_size=n))
    sense = draw(st.sampled_from(["min", "max"]))
    bounds = tuple((Fraction(-5), Fraction(5)) for _ in range(n))
    return LinearProgram(tuple(obj), rows, sense, bounds)


@given(box_lps())
def test_every_outcome_carries_a_valid_certificate(lp):
    out = solve(lp)
    assert out.status in (OPTIMAL, INFEASIBLE)   # bounded variables
    assert verify(lp, out)


@given(box_lps())
def test_optimum_beats_every_vertex_of_a_grid(lp):
    out = solve(lp)
    if out.status != OPTIMAL:
        return
    assert verify_optimal(lp, out)
    n = len(lp.objective)
    sign = 1 if lp.sense == "max" else -1
    grid = [Fraction(k) for k in range(-5, 6)]

    def feasible(x):
        for c in lp.constraints:
            lhs = c.lhs(x)
            if (c.relation == "<=" and lhs > c.rhs) or (c.relation == ">=" and lhs < c.rhs) \
                    or (c.relation == "==" and lhs != c.rhs):
                return False
        return True

    for x in itertools.product(grid, repeat=n):
        if feasible(x):
            val = sum(a * v for a, v in zip(lp.objective, x))
            assert sign * val <= sign * out.value


def test_tampered_certificate_is_rejected():
    lp = LinearProgram((1,), [le([1], 1)], "max")
    out = solve(lp)
    assert not verify_optimal(lp, replace(out, value=Fraction(2)))
    assert not verify_optimal(lp, replace(out, duals=(Fraction(2),)))
