from __future__ import annotations

from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from frictionlab.concave import ConcavePL, _restrict_generic, restrict_pairs
from frictionlab.geometry import Box, hull

from conftest import points, rationals
from oracles import envelope_value

F = Fraction


def test_interior_pairs_below_the_chord_are_dropped():
    f = ConcavePL.envelope(1, [((0,), 0), ((1,), F(1, 4)), ((2,), 1)])
    assert f.pairs == (((0,), 0), ((2,), 1))
    assert f.value_at((1,)) == F(1, 2)
    assert f.value_at((3,)) is None


def test_tent_keeps_its_peak():
    f = ConcavePL.envelope(1, [((0,), 0), ((1,), 2), ((2,), 0)])
    assert f.max() == (2, (1,))
    assert len(f.pieces()) == 2


def test_binomial_root_function():
    # children u: [5,6] with value 1, d: [1,2] with value 0, restricted to [2,4]
    f = ConcavePL.envelope(1, [((5,), 1), ((6,), 1), ((1,), 0), ((2,), 0)])
    top = f.restrict(Box((F(2),), (F(4),)).polytope())
    # the chord from (1, 0) to (5, 1) lies above the pair at 2
    assert dict(top) == {(F(2),): F(1, 4), (F(4),): F(3, 4)}


def test_pyramid_in_the_plane():
    corners = [(0, 0), (2, 0), (0, 2), (2, 2)]
    f = ConcavePL.envelope(2, [(c, 0) for c in corners] + [((1, 1), 1)])
    assert f.value_at((1, 1)) == 1
    assert f.value_at((F(1, 2), 1)) == F(1, 2)
    assert len(f.pieces()) == 4


def test_generic_route_matches_the_planar_one():
    pairs = [((0, 0), 0), ((2, 0), 1), ((0, 2), 1), ((2, 2), 0), ((1, 1), 2)]
    f = ConcavePL.envelope(2, pairs)
    D = Box((F(1, 2), F(1, 2)), (F(3, 2), F(3, 2))).polytope()
    assert sorted(restrict_pairs(2, f.pairs, D)) == sorted(_restrict_generic(2, dict(f.pairs), D))


@st.composite
def planar_pairs(draw):
    pts = draw(st.lists(points(2, 0, 4, 1), min_size=1, max_size=6, unique=True))
    return [(p, draw(rationals(-3, 3, 2))) for p in pts]


@given(planar_pairs(), points(2, 0, 4, 2))
def test_envelope_matches_brute_force(pairs, x):
    f = ConcavePL.envelope(2, pairs)
    assert f.value_at(x) == envelope_value(pairs, x)


@given(planar_pairs())
def test_kept_pairs_are_exactly_the_extreme_ones(pairs):
    f = ConcavePL.envelope(2, pairs)
    kept = dict(f.pairs)
    for p, v in pairs:
        others = [(q, w) for q, w in kept.items() if q != p]
        below = envelope_value(others, p) if others else None
        if p in kept:
            assert below is None or below < kept[p]
        else:
            assert below is not None and below >= v


@given(planar_pairs(), points(2, 0, 4, 2), points(2, 0, 4, 2))
def test_restriction_agrees_with_the_function_inside_the_box(pairs, a, b):
    lo = tuple(min(u, v) for u, v in zip(a, b))
    hi = tuple(max(u, v) + F(1, 2) for u, v in zip(a, b))
    D = Box(lo, hi).polytope()
    f = ConcavePL.envelope(2, pairs)
    top = f.restrict(D)
    for p, v in top:
        assert D.contains(p)
        assert f.value_at(p) == v
    dom = f.domain()
    for x in [lo, hi, ((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2)]:
        inside = dom.contains(x)
        g = envelope_value(top, x) if top else None
        assert g == (f.value_at(x) if inside else None)
