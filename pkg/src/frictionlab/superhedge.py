"""Superhedging on scenario trees with bid-ask boxes.

The backward recursion pools, at every node, the children's value functions
restricted to their support sets and takes the upper concave envelope. Its
maximum over the root support set is the superhedging price. A forward pass
then extracts a frictionless price process and a strategy whose trades only
buy where that process sits at the ask and only sell where it sits at the
bid. The dual side (consistent price systems, linearised by mass and
mass-times-price variables) is solved independently by LP.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from . import support_sets as ss
from .concave import ConcavePL
from .geometry import dot
from .market import Market, position, value
from .rational_lp import LinearProgram, as_rational, eq, ge, le, solve

EMPTY_SUPPORT = "Omega* is empty: no consistent price system, price unconstrained below"


class SuperhedgeError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# the consistent-price-system LP
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CpsLp:
    """Variables per node: mass ``q(n) >= 0`` and moments ``theta(n)``."""

    market: Market
    index: Mapping[str, int]

    @classmethod
    def build(cls, market: Market) -> "CpsLp":
        return cls(market, {nid: k for k, nid in enumerate(market.order)})

    @property
    def num_vars(self) -> int:
        return len(self.index) * (1 + self.market.d)

    def q(self, nid: str) -> int:
        return self.index[nid] * (1 + self.market.d)

    def theta(self, nid: str, j: int) -> int:
        return self.q(nid) + 1 + j

    def rows(self) -> list:
        m, n = self.market, self.num_vars
        out = []

        def row(entries):
            r = [0] * n
            for k, v in entries:
                r[k] += v
            return r

        out.append(eq(row([(self.q(m.root), 1)]), 1))
        for nid in m.order:
            node = m.nodes[nid]
            if node.children:
                out.append(eq(row([(self.q(nid), 1)] + [(self.q(c), -1) for c in node.children]), 0))
                for j in range(m.d):
                    out.append(eq(row([(self.theta(nid, j), 1)]
                                      + [(self.theta(c, j), -1) for c in node.children]), 0))
            for j in range(m.d):
                out.append(ge(row([(self.theta(nid, j), 1), (self.q(nid), -node.bid[j])]), 0))
                out.append(le(row([(self.theta(nid, j), 1), (self.q(nid), -node.ask[j])]), 0))
        return out

    def bounds(self) -> tuple:
        b = []
        for _ in self.market.order:
            b.append((0, None))
            b.extend([(None, None)] * self.market.d)
        return tuple(b)

    def program(self, objective: Mapping[int, Fraction], sense="max") -> LinearProgram:
        obj = [Fraction(0)] * self.num_vars
        for k, v in objective.items():
            obj[k] = as_rational(v)
        return LinearProgram(tuple(obj), self.rows(), sense, self.bounds())

    def decode(self, x) -> tuple:
        """``(mass, prices)``; prices only where the mass is positive."""
        mass, prices = {}, {}
        for nid in self.market.order:
            qn = x[self.q(nid)]
            mass[nid] = qn
            if qn > 0:
                prices[nid] = tuple(x[self.theta(nid, j)] / qn for j in range(self.market.d))
        return mass, prices


@dataclass(frozen=True)
class EfficientSupport:
    leaves: tuple
    witness_mass: Mapping[str, Fraction]
    max_mass: Mapping[str, Fraction]
    farkas: Optional[tuple] = None

    @property
    def empty(self) -> bool:
        return not self.leaves

    def __contains__(self, leaf) -> bool:
        return leaf in self.leaves


def omega_star(market: Market) -> EfficientSupport:
    """Leaves charged by some consistent price system (closed boxes)."""
    lp = CpsLp.build(market)
    members, witness, maxima = {}, {}, {}
    for leaf in market.leaves:
        if leaf in members:
            continue
        out = solve(lp.program({lp.q(leaf): 1}))
        if out.infeasible:
            return EfficientSupport((), {}, {}, out.farkas)
        maxima[leaf] = out.value
        for other in market.leaves:
            qv = out.x[lp.q(other)]
            if qv > 0 and other not in members:
                members[other] = True
                witness[other] = qv
    leaves = tuple(l for l in market.leaves if l in members)
    return EfficientSupport(leaves, witness, maxima)


@dataclass(frozen=True)
class OracleResult:
    value: Optional[Fraction]
    mass: Mapping[str, Fraction] = field(default_factory=dict)
    prices: Mapping[str, tuple] = field(default_factory=dict)
    farkas: Optional[tuple] = None

    @property
    def feasible(self) -> bool:
        return self.value is not None


def oracle_price(market: Market, g: Mapping[str, Fraction]) -> OracleResult:
    """``max sum_leaf q(leaf) g(leaf)`` over consistent price systems."""
    lp = CpsLp.build(market)
    out = solve(lp.program({lp.q(l): g[l] for l in market.leaves}))
    if out.infeasible:
        return OracleResult(None, farkas=out.farkas)
    mass, prices = lp.decode(out.x)
    return OracleResult(out.value, mass, prices)


def cps_lp_feasible(market: Market) -> bool:
    lp = CpsLp.build(market)
    return solve(lp.program({})).optimal


# --------------------------------------------------------------------------
# backward recursion and price
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Backward:
    supports: ss.SupportSets
    F: Mapping[str, ConcavePL]
    restricted: Mapping[str, tuple]     # top vertices of F(n) on the support set


def backward_F(market: Market, g: Mapping[str, Fraction],
               supports: Optional[ss.SupportSets] = None) -> Backward:
    sup = supports or ss.compute(market)
    d = market.d
    F, restricted = {}, {}
    for nid in market.bottom_up():
        node = market.nodes[nid]
        if node.is_leaf:
            F[nid] = ConcavePL.constant(node.box.polytope(), as_rational(g[nid]))
        else:
            pooled = [pair for c in node.children for pair in restricted[c]]
            F[nid] = ConcavePL.envelope(d, pooled)
        restricted[nid] = tuple(F[nid].restrict(sup[nid])) if not sup[nid].empty else ()
    return Backward(sup, F, restricted)


def price(market: Market, g, backward: Optional[Backward] = None):
    """``(m, xbar0)``; ``(None, None)`` when the root support set is empty."""
    bw = backward or backward_F(market, g)
    top = bw.restricted[market.root]
    if not top:
        return None, None
    m = max(f for _, f in top)
    return m, min(p for p, f in top if f == m)


# --------------------------------------------------------------------------
# forward extraction
# --------------------------------------------------------------------------

def _pick(pairs, h) -> tuple:
    """Pair maximising ``f - h . s``; ties go to the smallest point."""
    best = max(f - dot(h, p) for p, f in pairs)
    return min((p, f) for p, f in pairs if f - dot(h, p) == best)


def _direction_bounds(S, box, prev):
    bounds = []
    for j, s in enumerate(S):
        if s == box.hi[j]:
            bounds.append((prev[j], None))
        elif s == box.lo[j]:
            bounds.append((None, prev[j]))
        else:
            bounds.append((prev[j], prev[j]))
    return bounds


def _hedge_lp(X, S, pooled, box, prev):
    """Cheapest direction-consistent ``H`` with ``X + H.(s - S) >= f`` on the
    children's pooled pairs (total traded quantity minimised)."""
    d = len(S)
    # variables: H (d), u (d) with u >= |H - prev|
    n = 2 * d
    rows = []
    for p, f in pooled:
        r = [p[j] - S[j] for j in range(d)] + [0] * d
        rows.append(ge(r, f - X))
    for j in range(d):
        r = [0] * n
        r[j], r[d + j] = 1, -1
        rows.append(le(r, prev[j]))
        r = [0] * n
        r[j], r[d + j] = -1, -1
        rows.append(le(r, -prev[j]))
    obj = [0] * d + [1] * d
    bounds = tuple(_direction_bounds(S, box, prev)) + ((0, None),) * d
    out = solve(LinearProgram(tuple(obj), rows, "min", bounds))
    if not out.optimal:
        return None
    return tuple(out.x[:d])


@dataclass(frozen=True)
class SuperhedgeSolution:
    price: Optional[Fraction]
    xbar0: Optional[tuple]
    backward: Backward
    S: Mapping[str, tuple]
    X: Mapping[str, Fraction]
    strategy: Mapping[str, tuple]
    on_support: tuple
    omega_star: EfficientSupport
    oracle: OracleResult
    claim: Mapping[str, Fraction]

    @property
    def gap(self) -> Optional[Fraction]:
        if self.price is None or self.oracle.value is None:
            return None
        return self.price - self.oracle.value

    @property
    def F(self):
        return self.backward.F


def extract(market: Market, bw: Backward, m, xbar0):
    """Frictionless price process ``S``, running superhedge level ``X`` and
    direction-consistent strategy ``H``."""
    if m is None:
        raise SuperhedgeError("price is -inf (empty root support set); nothing to extract")
    d = market.d
    zero = (Fraction(0),) * d
    S, X, H = {}, {}, {}
    on = []
    for nid in market.order:
        node = market.nodes[nid]
        box = node.box
        prev = position(market, H, node.parent)
        if node.parent is None:
            S[nid], X[nid] = xbar0, m
        elif bw.restricted[nid] and node.parent in X:
            s, f = _pick(bw.restricted[nid], prev)
            S[nid], X[nid] = s, f
        else:
            S[nid] = ss.boundary_process(prev, box)
            if not node.is_leaf:
                H[nid] = zero
            continue
        on.append(nid)
        if node.is_leaf:
            continue
        pooled = [pair for c in node.children for pair in bw.restricted[c]]
        if not pooled:
            H[nid] = zero
            continue
        h = _hedge_lp(X[nid], S[nid], pooled, box, prev)
        if h is None:
            raise SuperhedgeError(
                f"{nid}: no direction-consistent hedge exists (engine invariant broken)")
        H[nid] = h
    return S, X, H, tuple(on)


def extract_price_process(market: Market, g, backward: Optional[Backward] = None) -> dict:
    bw = backward or backward_F(market, g)
    m, xbar = price(market, g, bw)
    return extract(market, bw, m, xbar)[0]


def extract_strategy(market: Market, g, backward: Optional[Backward] = None) -> dict:
    bw = backward or backward_F(market, g)
    m, xbar = price(market, g, bw)
    return extract(market, bw, m, xbar)[2]


def superhedge(market: Market, g: Mapping[str, Fraction]) -> SuperhedgeSolution:
    g = {l: as_rational(v) for l, v in g.items()}
    bw = backward_F(market, g)
    m, xbar = price(market, g, bw)
    om = omega_star(market)
    orc = oracle_price(market, g)
    if m is None:
        return SuperhedgeSolution(None, None, bw, {}, {}, {}, (), om, orc, g)
    S, X, H, on = extract(market, bw, m, xbar)
    return SuperhedgeSolution(m, xbar, bw, S, X, H, on, om, orc, g)


def hedge_slack(market: Market, sol: SuperhedgeSolution) -> dict:
    """``m + V_T(H) - g`` on every leaf."""
    v = value(market, sol.strategy)
    return {l: sol.price + v[l] - sol.claim[l] for l in market.leaves}


def direction_consistent(market: Market, S, H) -> bool:
    """Buys only where ``S`` is at the ask, sells only where it is at the bid."""
    for nid in market.order:
        node = market.nodes[nid]
        prev = position(market, H, node.parent)
        new = position(market, H, nid)
        for j in range(market.d):
            if new[j] > prev[j] and S[nid][j] != node.ask[j]:
                return False
            if new[j] < prev[j] and S[nid][j] != node.bid[j]:
                return False
    return True


def frictionless_price(market: Market, S: Mapping[str, tuple], g, nodes=None):
    """Frictionless superhedging price of ``g`` in the market ``S`` (LP over
    cash and per-node positions); ``None`` when unbounded below. ``nodes``
    restricts the tree to a rooted subtree given as a node collection."""
    keep = set(market.order if nodes is None else nodes)
    d = market.d
    internal = [n for n in market.order if n in keep and
                any(c in keep for c in market.children(n))]
    col = {n: 1 + k * d for k, n in enumerate(internal)}
    nv = 1 + d * len(internal)
    rows = []
    leaves = [l for l in market.leaves if l in keep]
    for leaf in leaves:
        r = [Fraction(0)] * nv
        r[0] = Fraction(1)
        path = market.path(leaf)
        for a, b in zip(path, path[1:]):
            for j in range(d):
                r[col[a] + j] += S[b][j] - S[a][j]
        rows.append(ge(r, g[leaf]))
    obj = [Fraction(0)] * nv
    obj[0] = Fraction(1)
    out = solve(LinearProgram(tuple(obj), rows, "min"))
    return out.value if out.optimal else None
