from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frictionlab.geometry import (Box, GeometryError, Polytope, affine_hull,
                                  caratheodory_weights, dot, facets, hull, intersect,
                                  intersect_polytopes, relative_interior_point,
                                  separating_functional, shrink_box,
                                  vertices_from_halfspaces)

from conftest import points

F = Fraction


def box(lo, hi):
    return Box(tuple(map(F, lo)), tuple(map(F, hi)))


def test_shrink_box_examples():
    assert shrink_box(box([1], [3]), F(1, 4)) == box(["3/2"], ["5/2"])
    b = shrink_box(box([0, 0], [4, 8]), F(1, 8))
    assert b.lo == (F(1, 2), F(1)) and b.hi == (F(7, 2), F(7))


def test_shrink_box_rejects_bad_parameters():
    for eps in (F(0), F(1, 2), F(-1, 3)):
        with pytest.raises(GeometryError):
            shrink_box(box([1], [3]), eps)


def test_hull_drops_interior_points():
    P = hull([(0, 0), (2, 0), (0, 2), (1, 1), (F(1, 2), F(1, 2))], 2)
    assert P.vertices == ((0, 0), (0, 2), (2, 0))


def test_hull_in_one_dimension():
    assert hull([(3,), (1,), (2,)], 1).vertices == ((1,), (3,))


def test_intersection_with_disjoint_box_is_empty():
    P = hull([(1,), (3,)], 1)
    assert intersect(P, box(["7/2"], [4])).empty


def test_intersection_of_triangle_and_box():
    P = hull([(0, 0), (4, 0), (0, 4)], 2)
    Q = intersect(P, box([1, 1], [3, 3]))
    assert set(Q.vertices) == {(1, 1), (3, 1), (1, 3)}


def test_separation_in_one_dimension():
    sep = separating_functional(hull([(1,), (3,)], 1), hull([(F(7, 2),), (4,)], 1), 1)
    assert sep.phi == (2,)
    assert sep.margin == 1


def test_no_separation_when_sets_meet():
    assert separating_functional(hull([(1,), (3,)], 1), hull([(2,), (4,)], 1), 1) is None


def test_caratheodory_weights_on_a_segment():
    w = dict(caratheodory_weights((4,), hull([(1,), (6,)], 1)))
    assert w == {(1,): F(2, 5), (6,): F(3, 5)}
    assert caratheodory_weights((7,), hull([(1,), (6,)], 1)) is None


def test_relative_interior_of_a_segment_in_the_plane():
    P = hull([(0, 0), (2, 2)], 2)
    assert relative_interior_point(P) == (1, 1)
    base, directions, normals = affine_hull(P)
    assert len(directions) == 1 and len(normals) == 1


@given(st.lists(points(2), min_size=1, max_size=8))
def test_hull_is_idempotent(pts):
    P = hull(pts, 2)
    assert hull(P.vertices, 2) == P
    assert all(P.contains(p) for p in pts)


@given(st.integers(1, 3).flatmap(lambda d: st.lists(points(d), min_size=1, max_size=7)))
def test_vertex_halfspace_round_trip(pts):
    d = len(pts[0])
    P = hull(pts, d)
    assert vertices_from_halfspaces(facets(P), d) == P


@given(st.lists(points(2), min_size=1, max_size=6), points(2), points(2), points(2))
def test_intersection_membership_is_exact(pts, a, b, x):
    lo = tuple(min(u, v) for u, v in zip(a, b))
    hi = tuple(max(u, v) + 1 for u, v in zip(a, b))
    B = Box(lo, hi)
    P = hull(pts, 2)
    Q = intersect(P, B)
    assert Q.contains(x) == (P.contains(x) and B.contains(x))
    assert intersect_polytopes(P, B.polytope()) == Q


@given(st.lists(points(2), min_size=1, max_size=5), st.lists(points(2), min_size=1, max_size=5))
def test_separator_margin_holds_on_all_vertices(ps, qs):
    P, Q = hull(ps, 2), hull(qs, 2)
    sep = separating_functional(P, Q, F(1, 3))
    if sep is None:
        assert not intersect_polytopes(P, Q).empty
        return
    assert intersect_polytopes(P, Q).empty
    for x in P.vertices:
        for s in Q.vertices:
            assert dot(sep.phi, s) - dot(sep.phi, x) >= F(1, 3)


@given(st.lists(points(3), min_size=1, max_size=6))
def test_caratheodory_weights_reproduce_the_point(pts):
    P = hull(pts, 3)
    x = relative_interior_point(P)
    w = caratheodory_weights(x, P)
    assert w is not None and len(w) <= 4
    assert sum(c for _, c in w) == 1 and all(c > 0 for _, c in w)
    assert tuple(sum(c * v[j] for v, c in w) for j in range(3)) == x


@given(points(2), st.integers(1, 7))
def test_shrunk_box_lies_inside(lo, k):
    B = Box(lo, tuple(v + 2 for v in lo))
    S = shrink_box(B, F(k, 16))
    assert all(B.contains_interior(v) for v in S.vertices())
