"""Concave piecewise-linear functions stored by their hypograph's top vertices.

A :class:`ConcavePL` is the upper concave envelope of finitely many
``(point, value)`` pairs, defined on the convex hull of the points and
``-inf`` elsewhere. Only pairs that are extreme points of the hypograph are
kept. One and two dimensional inputs use direct exact constructions (upper
chain, upper facets of the lifted point set); other dimensions fall back on
LP and halfspace enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Optional, Sequence

from .geometry import (Halfspace, Polytope, _clip, affine_hull, dot, facets, hull,
                       ordered_ring, point, vertices_from_halfspaces)
from .rational_lp import LinearProgram, eq, solve


def _dedupe(pairs) -> dict:
    best = {}
    for p, f in pairs:
        p = point(p)
        f = Fraction(f)
        if p not in best or f > best[p]:
            best[p] = f
    return best


# --------------------------------------------------------------------------
# dimension one
# --------------------------------------------------------------------------

def _upper_chain(best: dict) -> list:
    pts = sorted((p[0], f) for p, f in best.items())
    chain = []
    for x, f in pts:
        while len(chain) >= 2:
            (x0, f0), (x1, f1) = chain[-2], chain[-1]
            if (x1 - x0) * (f - f0) - (f1 - f0) * (x - x0) >= 0:
                chain.pop()
            else:
                break
        chain.append((x, f))
    return [((x,), f) for x, f in chain]


def _eval_chain(chain, x) -> Optional[Fraction]:
    xs = [p[0] for p, _ in chain]
    if x < xs[0] or x > xs[-1]:
        return None
    for (p0, f0), (p1, f1) in zip(chain, chain[1:]):
        if p0[0] <= x <= p1[0]:
            return f0 + (f1 - f0) * (x - p0[0]) / (p1[0] - p0[0])
    return chain[0][1]


def _restrict_chain(chain, lo, hi) -> list:
    a = max(lo, chain[0][0][0])
    b = min(hi, chain[-1][0][0])
    if a > b:
        return []
    out = {(a,): _eval_chain(chain, a), (b,): _eval_chain(chain, b)}
    for p, f in chain:
        if a < p[0] < b:
            out[p] = f
    return _upper_chain(out)


# --------------------------------------------------------------------------
# dimension two
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    """A linear piece ``z = a . x + b`` over the polygon ``ring``."""

    a: tuple
    b: Fraction
    ring: tuple

    def at(self, x) -> Fraction:
        return dot(self.a, x) + self.b


def _upper_cells(best: dict) -> list:
    """Upper facets of the lifted points (projection assumed 2-dimensional)."""
    items = sorted(best.items())
    den = 1
    for p, f in items:
        den = lcm(den, p[0].denominator, p[1].denominator, f.denominator)
    P = [(int(p[0] * den), int(p[1] * den), int(f * den)) for p, f in items]
    n = len(P)
    found = {}
    for i, j, k in combinations(range(n), 3):
        xi, yi, zi = P[i]
        ux, uy, uz = P[j][0] - xi, P[j][1] - yi, P[j][2] - zi
        vx, vy, vz = P[k][0] - xi, P[k][1] - yi, P[k][2] - zi
        nz = ux * vy - uy * vx
        if nz == 0:
            continue
        nx = uy * vz - uz * vy
        ny = uz * vx - ux * vz
        if nz < 0:
            nx, ny, nz = -nx, -ny, -nz
        c = nx * xi + ny * yi + nz * zi
        ok = True
        for X, Y, Z in P:
            if nx * X + ny * Y + nz * Z > c:
                ok = False
                break
        if not ok:
            continue
        key = (Fraction(-nx, nz), Fraction(-ny, nz), Fraction(c, nz * den))
        if key in found:
            continue
        on = [items[m][0] for m in range(n) if nx * P[m][0] + ny * P[m][1] + nz * P[m][2] == c]
        ring = ordered_ring(hull(on, 2))
        found[key] = Cell((key[0], key[1]), key[2], tuple(ring))
    return list(found.values())


# --------------------------------------------------------------------------
# the function type
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcavePL:
    dim: int
    pairs: tuple = ()

    @classmethod
    def envelope(cls, dim: int, pairs) -> "ConcavePL":
        """Upper concave envelope of ``pairs`` with redundant pairs dropped."""
        return cls(dim, tuple(sorted(upper_envelope(dim, pairs))))

    @classmethod
    def constant(cls, P: Polytope, c) -> "ConcavePL":
        return cls.envelope(P.dim, [(v, c) for v in P.vertices])

    @property
    def empty(self) -> bool:
        return not self.pairs

    @property
    def points(self) -> list:
        return [p for p, _ in self.pairs]

    def domain(self) -> Polytope:
        return hull(self.points, self.dim) if self.pairs else Polytope.empty_set(self.dim)

    def value_at(self, x) -> Optional[Fraction]:
        """Envelope value at ``x`` by LP; ``None`` outside the domain."""
        return envelope_lp(self.pairs, x)[0]

    def max(self) -> Optional[tuple]:
        """``(value, lexicographically smallest maximiser)``."""
        if not self.pairs:
            return None
        top = max(f for _, f in self.pairs)
        return top, min(p for p, f in self.pairs if f == top)

    def restrict(self, D: Polytope) -> list:
        """Top vertices of the hypograph restricted to ``D``."""
        return restrict_pairs(self.dim, self.pairs, D)

    def pieces(self) -> list:
        """Affine pieces ``(a, b)`` with ``F = min_k a_k . x + b_k`` on the
        domain (full-dimensional domains only)."""
        best = dict(self.pairs)
        if self.dim == 1:
            ch = _upper_chain(best)
            return [(((f1 - f0) / (p1[0] - p0[0]),), f0 - (f1 - f0) / (p1[0] - p0[0]) * p0[0])
                    for (p0, f0), (p1, f1) in zip(ch, ch[1:])]
        if self.dim == 2:
            return [(c.a, c.b) for c in _upper_cells(best)]
        raise NotImplementedError("pieces are provided for dimensions 1 and 2")


def envelope_lp(pairs, x):
    """``(value, weights)`` of ``max sum l_i f_i`` with ``sum l_i p_i = x``."""
    if not pairs:
        return None, None
    x = point(x)
    k = len(pairs)
    rows = [eq([1] * k, 1)]
    for j in range(len(x)):
        rows.append(eq([p[j] for p, _ in pairs], x[j]))
    out = solve(LinearProgram(tuple(f for _, f in pairs), rows, "max", ((0, None),) * k))
    if not out.optimal:
        return None, None
    return out.value, out.x


def _local_frame(points, dim):
    """Affine frame of ``points``: ``(base, directions, pivots)``."""
    P = Polytope(dim, points)
    base, directions, _ = affine_hull(P)
    pivots = [next(j for j, v in enumerate(r) if v != 0) for r in directions]
    return base, directions, pivots


def _to_local(p, base, pivots):
    return tuple(p[c] - base[c] for c in pivots)


def _to_global(c, base, directions):
    return tuple(base[j] + sum((ci * r[j] for ci, r in zip(c, directions)), Fraction(0))
                 for j in range(len(base)))


def upper_envelope(dim: int, pairs) -> list:
    best = _dedupe(pairs)
    if len(best) <= 1:
        return list(best.items())
    base, directions, pivots = _local_frame(list(best), dim)
    k = len(directions)
    if k < dim:
        local = {_to_local(p, base, pivots): f for p, f in best.items()}
        return [(_to_global(c, base, directions), f) for c, f in upper_envelope(k, local.items())]
    if dim == 1:
        return _upper_chain(best)
    if dim == 2:
        keep = {}
        for cell in _upper_cells(best):
            for p in cell.ring:
                keep[p] = best[p]
        return sorted(keep.items())
    items = sorted(best.items())
    keep = list(items)
    for pair in items:
        others = [q for q in keep if q != pair]
        val, _ = envelope_lp(others, pair[0])
        if val is not None and val >= pair[1]:
            keep = others
    return keep


def _local_polytope(D: Polytope, base, directions, pivots, k):
    """``D`` intersected with the affine frame, in local coordinates."""
    hs = []
    for h in facets(D):
        normal = tuple(dot(h.normal, r) for r in directions)
        rhs = h.offset - dot(h.normal, base)
        if not any(normal):
            if rhs < 0:
                return Polytope.empty_set(k)
            continue
        hs.append(Halfspace(normal, rhs))
    if not hs:
        raise ValueError("unbounded local polytope")
    return vertices_from_halfspaces(hs, k)


def restrict_pairs(dim: int, pairs, D: Polytope) -> list:
    if not pairs or D.empty:
        return []
    best = dict(pairs)
    pts = list(best)
    if len(pts) == 1:
        return [(pts[0], best[pts[0]])] if D.contains(pts[0]) else []
    base, directions, pivots = _local_frame(pts, dim)
    k = len(directions)
    if k < dim:
        local = {_to_local(p, base, pivots): f for p, f in best.items()}
        Dl = _local_polytope(D, base, directions, pivots, k)
        res = restrict_pairs(k, list(local.items()), Dl)
        return [(_to_global(c, base, directions), f) for c, f in res]
    if dim == 1:
        return _restrict_chain(_upper_chain(best), D.vertices[0][0], D.vertices[-1][0])
    if dim == 2:
        hs = facets(D)
        cand = {}
        for cell in _upper_cells(best):
            ring = list(cell.ring)
            for h in hs:
                ring = _clip(ring, h.normal, h.offset)
                if not ring:
                    break
            for p in ring:
                v = cell.at(p)
                if p not in cand or v > cand[p]:
                    cand[p] = v
        return upper_envelope(2, cand.items()) if cand else []
    return _restrict_generic(dim, best, D)


def _restrict_generic(dim, best, D):
    floor = min(best.values()) - 1
    lifted = [p + (f,) for p, f in best.items()] + [p + (floor,) for p in best]
    P = hull(lifted, dim + 1)
    hs = facets(P)
    for h in facets(D):
        hs.append(Halfspace(h.normal + (Fraction(0),), h.offset))
    V = vertices_from_halfspaces(hs, dim + 1)
    top = [(v[:dim], v[dim]) for v in V.vertices if v[dim] > floor]
    return upper_envelope(dim, top)
