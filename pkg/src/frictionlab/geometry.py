"""Exact polyhedral primitives in low dimension.

Polytopes are stored by their extreme points (V-representation). Halfspace
descriptions are derived when needed. Everything is exact; degenerate and
lower-dimensional sets are ordinary citizens.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import gcd
from typing import Iterable, Optional, Sequence

from .rational_lp import (LinearProgram, as_rational, eq, feasible_point, ge, le, solve)

Point = tuple


class GeometryError(ValueError):
    pass


def point(coords: Iterable) -> Point:
    return tuple(as_rational(c) for c in coords)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), Fraction(0))


def sub(a, b) -> Point:
    return tuple(x - y for x, y in zip(a, b))


@dataclass(frozen=True)
class Polytope:
    """Convex hull of ``vertices``; empty when there are none."""

    dim: int
    vertices: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise GeometryError("dimension must be positive")
        verts = tuple(sorted(set(point(v) for v in self.vertices)))
        for v in verts:
            if len(v) != self.dim:
                raise GeometryError(f"vertex {v} does not have dimension {self.dim}")
        object.__setattr__(self, "vertices", verts)

    @property
    def empty(self) -> bool:
        return not self.vertices

    def __bool__(self) -> bool:
        return not self.empty

    def __len__(self) -> int:
        return len(self.vertices)

    @classmethod
    def empty_set(cls, dim: int) -> "Polytope":
        return cls(dim, ())

    def contains(self, x: Sequence) -> bool:
        return caratheodory_weights(x, self) is not None


@dataclass(frozen=True)
class Halfspace:
    """The set ``{x : normal . x <= offset}``."""

    normal: tuple
    offset: Fraction

    def __post_init__(self):
        n = point(self.normal)
        if not any(n):
            raise GeometryError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", as_rational(self.offset))

    def contains(self, x: Sequence) -> bool:
        return dot(self.normal, x) <= self.offset

    def slack(self, x: Sequence) -> Fraction:
        return self.offset - dot(self.normal, x)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod_j [lo_j, hi_j]`` with ``lo_j < hi_j``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = point(self.lo), point(self.hi)
        if len(lo) != len(hi) or not lo:
            raise GeometryError("box bounds must be nonempty and of equal length")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if not a < b:
                raise GeometryError(
                    f"coordinate {j}: lower bound {a} is not below upper bound {b}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> Point:
        return sub(self.hi, self.lo)

    def vertices(self) -> list:
        return [tuple(c) for c in product(*zip(self.lo, self.hi))]

    def polytope(self) -> Polytope:
        return Polytope(self.dim, self.vertices())

    def center(self) -> Point:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def contains(self, x: Sequence) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, x, self.hi))

    def contains_interior(self, x: Sequence) -> bool:
        return all(a < v < b for a, v, b in zip(self.lo, x, self.hi))

    def halfspaces(self) -> list:
        out = []
        for j in range(self.dim):
            e = [Fraction(0)] * self.dim
            e[j] = Fraction(1)
            out.append(Halfspace(tuple(e), self.hi[j]))
            e[j] = Fraction(-1)
            out.append(Halfspace(tuple(e), -self.lo[j]))
        return out


def shrink_box(box: Box, eps) -> Box:
    """``[lo + eps*w, hi - eps*w]`` per coordinate; requires ``0 < eps < 1/2``."""
    eps = as_rational(eps)
    if not 0 < eps < Fraction(1, 2):
        raise GeometryError(f"shrink parameter must lie in (0, 1/2), got {eps}")
    w = box.widths
    return Box(tuple(a + eps * x for a, x in zip(box.lo, w)),
               tuple(b - eps * x for b, x in zip(box.hi, w)))


# --------------------------------------------------------------------------
# hulls
# --------------------------------------------------------------------------

def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _chain2(pts: list) -> list:
    """Andrew's monotone chain; collinear points dropped; CCW order."""
    if len(pts) <= 2:
        return list(pts)
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    ring = lower[:-1] + upper[:-1]
    return ring if len(ring) > 1 else [pts[0], pts[-1]]


def _in_hull_lp(x, pts) -> Optional[tuple]:
    """Convex weights expressing ``x`` over ``pts`` (a basic solution)."""
    k = len(pts)
    if k == 0:
        return None
    rows = [eq([1] * k, 1)]
    for j in range(len(x)):
        rows.append(eq([p[j] for p in pts], x[j]))
    out = solve(LinearProgram((0,) * k, rows, "min", ((0, None),) * k))
    return out.x if out.optimal else None


def hull_lp(points: Iterable, dim: Optional[int] = None) -> Polytope:
    """Hull by LP redundancy removal in any dimension (reference route)."""
    pts = sorted(set(point(p) for p in points))
    if dim is None:
        if not pts:
            raise GeometryError("cannot infer dimension of an empty point set")
        dim = len(pts[0])
    keep = list(pts)
    for p in pts:
        others = [q for q in keep if q != p]
        if others and _in_hull_lp(p, others) is not None:
            keep = others
    return Polytope(dim, keep)


def hull(points: Iterable, dim: Optional[int] = None) -> Polytope:
    """Extreme points of the convex hull of ``points``."""
    pts = sorted(set(point(p) for p in points))
    if dim is None:
        if not pts:
            raise GeometryError("cannot infer dimension of an empty point set; pass dim")
        dim = len(pts[0])
    for p in pts:
        if len(p) != dim:
            raise GeometryError(f"point {p} does not have dimension {dim}")
    if len(pts) <= 1:
        return Polytope(dim, pts)
    if dim == 1:
        return Polytope(1, [pts[0], pts[-1]])
    if dim == 2:
        return Polytope(2, _chain2(pts))
    return hull_lp(pts, dim)


def ordered_ring(P: Polytope) -> list:
    """Vertices of a planar polytope in counter-clockwise order."""
    if P.dim != 2:
        raise GeometryError("ordered_ring needs a planar polytope")
    return _chain2(list(P.vertices))


# --------------------------------------------------------------------------
# linear algebra helpers
# --------------------------------------------------------------------------

def _rref(rows: list, ncols: int):
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def null_space(rows: list, ncols: int) -> list:
    """Basis of ``{x : rows . x = 0}`` (exact)."""
    red, pivots = _rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        basis.append(tuple(v))
    return basis


def solve_square(a: list, b: list) -> Optional[Point]:
    """Unique solution of ``a x = b`` or ``None`` when singular."""
    n = len(a)
    aug = [list(r) + [v] for r, v in zip(a, b)]
    red, pivots = _rref(aug, n + 1)
    if pivots != list(range(n)):
        return None
    return tuple(red[i][n] for i in range(n))


def _primitive(v: Sequence[Fraction]) -> tuple:
    """Scale a rational vector to coprime integers (direction preserved)."""
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    g = g or 1
    return tuple(Fraction(x // g) for x in ints)


def affine_hull(P: Polytope):
    """``(base, directions, normals)``: base point, a basis of the direction
    space and a basis of its orthogonal complement."""
    base = P.vertices[0]
    diffs = [sub(v, base) for v in P.vertices[1:]]
    red, _ = _rref(diffs, P.dim) if diffs else ([], [])
    directions = [tuple(r) for r in red]
    normals = null_space(directions, P.dim)
    return base, directions, normals


# --------------------------------------------------------------------------
# H-representation
# --------------------------------------------------------------------------

def facets(P: Polytope) -> list:
    """Halfspaces whose intersection is exactly ``P``.

    Affine-hull equalities come out as opposite halfspace pairs, so the
    result is correct for flats as well as full-dimensional polytopes.
    """
    if P.empty:
        raise GeometryError("facets of the empty polytope are undefined")
    base, directions, normals = affine_hull(P)
    out = []
    for n in normals:
        n = _primitive(n)
        c = dot(n, base)
        out.append(Halfspace(n, c))
        out.append(Halfspace(tuple(-x for x in n), -c))
    k = len(directions)
    if k == 0:
        return out
    seen = set()
    verts = P.vertices
    for subset in combinations(range(len(verts)), k):
        u0 = verts[subset[0]]
        # normal a = sum_i c_i directions_i, orthogonal to the subset's spread
        rows = []
        for idx in subset[1:]:
            diff = sub(verts[idx], u0)
            rows.append([dot(diff, dvec) for dvec in directions])
        ns = null_space(rows, k)
        if len(ns) != 1:
            continue
        coef = ns[0]
        a = tuple(sum((ci * dvec[j] for ci, dvec in zip(coef, directions)), Fraction(0))
                  for j in range(P.dim))
        level = dot(a, u0)
        vals = [dot(a, v) for v in verts]
        if all(v <= level for v in vals):
            pass
        elif all(v >= level for v in vals):
            a = tuple(-x for x in a)
            level = -level
        else:
            continue
        if all(dot(a, v) == level for v in verts):
            continue
        a = _primitive(a)
        level = dot(a, u0)
        if (a, level) in seen:
            continue
        seen.add((a, level))
        out.append(Halfspace(a, level))
    return out


def vertices_from_halfspaces(halfspaces: Sequence[Halfspace], dim: int) -> Polytope:
    """Extreme points of a bounded intersection of halfspaces."""
    hs = list(dict.fromkeys(halfspaces))
    found = set()
    for subset in combinations(hs, dim):
        x = solve_square([list(h.normal) for h in subset], [h.offset for h in subset])
        if x is None or x in found:
            continue
        if all(h.contains(x) for h in hs):
            found.add(x)
    return Polytope(dim, found)


# --------------------------------------------------------------------------
# intersection
# --------------------------------------------------------------------------

def _clip(ring: list, normal, offset) -> list:
    out = []
    n = len(ring)
    for i in range(n):
        cur, nxt = ring[i], ring[(i + 1) % n]
        cv, nv = dot(normal, cur) - offset, dot(normal, nxt) - offset
        if cv <= 0:
            out.append(cur)
        if (cv < 0 < nv) or (nv < 0 < cv):
            t = cv / (cv - nv)
            out.append(tuple(a + t * (b - a) for a, b in zip(cur, nxt)))
    return out


def intersect(P: Polytope, B: Box) -> Polytope:
    """``P`` intersected with the box ``B``."""
    if P.dim != B.dim:
        raise GeometryError("dimension mismatch between polytope and box")
    if P.empty:
        return P
    if all(B.contains(v) for v in P.vertices):
        return P
    if P.dim == 1:
        lo = max(P.vertices[0][0], B.lo[0])
        hi = min(P.vertices[-1][0], B.hi[0])
        if lo > hi:
            return Polytope.empty_set(1)
        return Polytope(1, [(lo,), (hi,)])
    if P.dim == 2:
        ring = ordered_ring(P)
        for h in B.halfspaces():
            ring = _clip(ring, h.normal, h.offset)
            if not ring:
                return Polytope.empty_set(2)
        return hull(ring, 2)
    return vertices_from_halfspaces(facets(P) + B.halfspaces(), P.dim)


def intersect_polytopes(P: Polytope, Q: Polytope) -> Polytope:
    """General intersection through the facet join (used for cross-checks)."""
    if P.empty or Q.empty:
        return Polytope.empty_set(P.dim)
    return vertices_from_halfspaces(facets(P) + facets(Q), P.dim)


def contains_point(P: Polytope, x: Sequence) -> bool:
    return P.contains(x)


# --------------------------------------------------------------------------
# separation and interior points
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Separator:
    """``phi . x <= upper`` on the first set, ``phi . s >= lower`` on the
    second, and ``lower - upper`` equals the requested margin."""

    phi: tuple
    upper: Fraction
    lower: Fraction

    @property
    def margin(self) -> Fraction:
        return self.lower - self.upper


def separating_functional(P: Polytope, Q: Polytope, eps) -> Optional[Separator]:
    """``phi`` with ``phi . (s - x) >= eps`` for all ``s`` in ``Q``, ``x`` in
    ``P``, or ``None`` when the two polytopes meet."""
    eps = as_rational(eps)
    if eps <= 0:
        raise GeometryError("separation margin must be positive")
    if P.empty or Q.empty:
        raise GeometryError("separation needs two nonempty polytopes")
    d = P.dim
    # variables: phi (d, free), t (d, >= 0), alpha, beta
    nv = 2 * d + 2
    ia, ib = 2 * d, 2 * d + 1

    def row(**parts):
        r = [Fraction(0)] * nv
        for k, v in parts.items():
            for idx, val in v:
                r[idx] = val
        return r

    rows = []
    for s in Q.vertices:
        rows.append(ge(row(a=[(j, s[j]) for j in range(d)] + [(ia, Fraction(-1))]), 0))
    for x in P.vertices:
        rows.append(le(row(a=[(j, x[j]) for j in range(d)] + [(ib, Fraction(-1))]), 0))
    for j in range(d):
        rows.append(le(row(a=[(j, Fraction(1)), (d + j, Fraction(-1))]), 0))
        rows.append(ge(row(a=[(j, Fraction(1)), (d + j, Fraction(1))]), 0))
    rows.append(le(row(a=[(d + j, Fraction(1)) for j in range(d)]), 1))
    obj = [Fraction(0)] * nv
    obj[ia], obj[ib] = Fraction(1), Fraction(-1)
    bounds = [(None, None)] * d + [(0, None)] * d + [(None, None), (None, None)]
    out = solve(LinearProgram(tuple(obj), rows, "max", tuple(bounds)))
    phi = out.x[:d]
    lower = min(dot(phi, s) for s in Q.vertices)
    upper = max(dot(phi, x) for x in P.vertices)
    gamma = lower - upper
    if gamma <= 0:
        return None
    scale = eps / gamma
    return Separator(tuple(scale * c for c in phi), scale * upper, scale * lower)


def relative_interior_point(P: Polytope) -> Point:
    """Vertex average; lies in the relative interior of ``P``."""
    if P.empty:
        raise GeometryError("the empty polytope has no interior point")
    k = len(P.vertices)
    return tuple(sum(col, Fraction(0)) / k for col in zip(*P.vertices))


def caratheodory_weights(x: Sequence, P: Polytope) -> Optional[list]:
    """Positive convex weights over at most ``dim + 1`` vertices with
    ``sum w_i v_i = x``, or ``None`` when ``x`` is outside ``P``."""
    x = point(x)
    if P.empty:
        return None
    if x in P.vertices:
        return [(x, Fraction(1))]
    lam = _in_hull_lp(x, list(P.vertices))
    if lam is None:
        return None
    return [(v, w) for v, w in zip(P.vertices, lam) if w > 0]


__all__ = [
    "Box", "Halfspace", "Polytope", "Separator", "GeometryError", "affine_hull",
    "caratheodory_weights", "contains_point", "dot", "facets", "feasible_point", "hull",
    "hull_lp", "intersect", "intersect_polytopes", "null_space", "ordered_ring", "point",
    "relative_interior_point", "separating_functional", "shrink_box", "solve_square",
    "vertices_from_halfspaces",
]
