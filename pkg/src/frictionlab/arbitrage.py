"""Both sides of the transaction-cost FTAP on scenario trees.

Either a strictly consistent price system is built from the support sets of
a shrunk spread, or, when the root support set is empty, an explicit
strategy with strictly positive terminal value on every leaf is constructed
by a forward sweep (open at the first failure, rebalance while the position
cannot be closed at a profit, liquidate as soon as it can).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Optional

from . import support_sets as ss
from .geometry import (Box, Polytope, caratheodory_weights, dot, hull, relative_interior_point,
                       separating_functional, shrink_box)
from .market import Market, position, trade_cash, value
from .rational_lp import LinearProgram, as_rational, ge, solve

RNA = "RobustNoArbitrage"
FAILS = "Fails"
INTERIOR_CONVENTION = ("relative interior for support sets, ambient interior for "
                       "bid-ask boxes")


class ArbitrageError(RuntimeError):
    pass


class PreconditionError(ArbitrageError):
    """construct_arbitrage called on a market whose root support set is nonempty."""


class InvariantError(ArbitrageError):
    """The running-value invariant failed during the sweep (an engine bug)."""


@dataclass(frozen=True)
class ConsistentPriceSystem:
    eps: Fraction                    # S(n) lies in the box shrunk by eps
    mass: Mapping[str, Fraction]     # per node; leaves give Q
    prices: Mapping[str, tuple]

    @property
    def Q(self) -> dict:
        return dict(self.mass)

    def leaf_weights(self, market: Market) -> dict:
        return {l: self.mass[l] for l in market.leaves}


@dataclass(frozen=True)
class ArbitrageCertificate:
    eps: Fraction
    delta: Fraction
    strategy: Mapping[str, tuple]
    scale: Fraction                  # raw sweep positions = scale * strategy
    values: Mapping[str, Fraction]   # leaf values under the shrunk spread
    unshrunk_values: Mapping[str, Fraction]
    openings: tuple
    actions: Mapping[str, str]
    tau: Mapping[str, object]
    diagnostics: tuple = ()


@dataclass(frozen=True)
class RnaVerdict:
    tag: str
    cps: Optional[ConsistentPriceSystem] = None
    margin: Optional[Fraction] = None
    certificate: Optional[ArbitrageCertificate] = None
    resolution_bits: int = 0
    probes: tuple = ()
    resolution_sensitive: bool = False
    interior_convention: str = INTERIOR_CONVENTION

    @property
    def holds(self) -> bool:
        return self.tag == RNA


# --------------------------------------------------------------------------
# strictly consistent price systems
# --------------------------------------------------------------------------

def strict_cps(market: Market, eps) -> Optional[ConsistentPriceSystem]:
    """CPS with prices in the ``eps``-shrunk boxes, or ``None`` when the
    shrunk root support set is empty."""
    eps = as_rational(eps)
    shrunk = market.shrunk(eps)
    sup = ss.compute(shrunk)
    return cps_from_supports(shrunk, sup, eps)


def cps_from_supports(shrunk: Market, sup: ss.SupportSets, eps) -> Optional[ConsistentPriceSystem]:
    root = shrunk.root
    if sup[root].empty:
        return None
    mass = {root: Fraction(1)}
    prices = {root: relative_interior_point(sup[root])}
    for nid in shrunk.order:
        node = shrunk.nodes[nid]
        if node.is_leaf:
            continue
        if mass[nid] == 0:
            for c in node.children:
                mass[c] = Fraction(0)
                prices[c] = shrunk.box(c).center()
            continue
        weights = caratheodory_weights(prices[nid], sup.conv_children[nid])
        if weights is None:
            raise ArbitrageError(f"point at {nid} escaped the children's hull")
        acc = {c: [Fraction(0), [Fraction(0)] * shrunk.d] for c in node.children}
        for v, w in weights:
            owner = next(c for c in node.children if v in sup[c].vertices)
            acc[owner][0] += w
            acc[owner][1] = [a + w * x for a, x in zip(acc[owner][1], v)]
        for c in node.children:
            lam, tot = acc[c]
            mass[c] = mass[nid] * lam
            prices[c] = tuple(x / lam for x in tot) if lam else shrunk.box(c).center()
    return ConsistentPriceSystem(as_rational(eps), mass, prices)


# --------------------------------------------------------------------------
# arbitrage construction
# --------------------------------------------------------------------------

def _liquidation_prices(h, box: Box) -> tuple:
    return ss.boundary_process(h, box)


def _trade_prices(prev, new, box: Box, tie_to_ask) -> tuple:
    """Execution price per coordinate for moving ``prev -> new``; ties use
    the supplied choice (they carry no cash either way)."""
    out = []
    for j, (a, b) in enumerate(zip(prev, new)):
        if a < b:
            out.append(box.hi[j])
        elif a > b:
            out.append(box.lo[j])
        else:
            out.append(box.hi[j] if tie_to_ask[j] else box.lo[j])
    return tuple(out)


def _min_over(points, fn):
    return min(fn(p) for p in points)


def _holds(V, h, targets, margin) -> bool:
    return all(V + dot(h, s) >= margin for s in targets)


def _rebalance_lp(V, H, box: Box, targets, margin):
    """Search the sign patterns for a rebalance satisfying the invariant,
    minimising total traded quantity. Returns ``(h, pattern)`` or ``None``."""
    d = len(H)
    best = None
    for eta in product((0, 1, -1), repeat=d):
        # eta^j = 1: sell (h <= H) at bid, -1: buy (h >= H) at ask, 0: hold
        price = tuple(box.lo[j] if eta[j] >= 0 else box.hi[j] for j in range(d))
        rows = []
        # V + (H - h).price + h.s >= margin   <=>   h.(s - price) >= margin - V - H.price
        base = margin - V - dot(H, price)
        for s in targets:
            rows.append(ge([sj - pj for sj, pj in zip(s, price)], base))
        bounds = []
        obj = []
        for j in range(d):
            if eta[j] == 1:
                bounds.append((None, H[j]))
                obj.append(Fraction(-1))
            elif eta[j] == -1:
                bounds.append((H[j], None))
                obj.append(Fraction(1))
            else:
                bounds.append((H[j], H[j]))
                obj.append(Fraction(0))
        out = solve(LinearProgram(tuple(obj), rows, "min", tuple(bounds)))
        if not out.optimal:
            continue
        cost = out.value + sum((H[j] if eta[j] == 1 else -H[j] if eta[j] == -1 else 0)
                               for j in range(d))
        if best is None or cost < best[0]:
            best = (cost, out.x, eta)
    return None if best is None else (best[1], best[2])


def _scaled_rebalance(V, H, box: Box, targets, margin, prev_margin, diagnostics, nid):
    """Rebalance following the two-case scaling argument. Returns
    ``(h, action)`` or ``None`` when neither case yields a valid position."""
    d = len(H)
    corners = box.vertices()
    L = [y for y in corners if V + dot(H, y) <= 0]
    if not L:
        return None
    sep = separating_functional(hull(L, d), hull(targets, d), 1)
    if sep is None:
        diagnostics.append(f"{nid}: losing corners meet the children's hull")
        return None
    h = sep.phi

    def s_hat(vec, ties):
        return _trade_prices(H, vec, box, ties)

    tie_choices = list(product((True, False), repeat=d))
    # case 1: some execution-price corner of h is a losing corner
    for ties in tie_choices:
        sh = s_hat(h, ties)
        if sh in L:
            eps1 = _min_over(targets, lambda s: dot(h, [a - b for a, b in zip(s, sh)]))
            if eps1 <= 0:
                continue
            alpha = max((-V - dot(H, sh) + margin) / eps1, 1 + margin)
            cand = tuple(alpha * x for x in h)
            return cand, "rebalance-case-1"
    # case 2: every execution-price corner of h wins; shrink h towards 0
    xi = _liquidation_prices(H, box)
    sh = s_hat(h, tie_choices[0])
    eps2 = _min_over(targets, lambda s: dot(h, [a - b for a, b in zip(s, xi)]))
    gap = eps2 - dot(h, [a - b for a, b in zip(sh, xi)])
    alpha = Fraction(1) if gap == 0 else min(margin / abs(gap), Fraction(1))
    cand = tuple(alpha * x for x in h)
    sh_bar = s_hat(cand, tie_choices[0])
    if V + dot(H, sh_bar) < prev_margin:
        diagnostics.append(
            f"{nid}: case-2 precondition V + H.S^h >= {prev_margin} fails "
            f"({V + dot(H, sh_bar)}); falling back to the pattern LP")
    return cand, "rebalance-case-2"


def construct_arbitrage(market: Market, eps, delta=1) -> ArbitrageCertificate:
    """Forward sweep producing a strategy with positive value on every leaf
    of the ``eps``-shrunk market."""
    eps, delta = as_rational(eps), as_rational(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    shrunk = market.shrunk(eps)
    sup = ss.compute(shrunk)
    if not sup[shrunk.root].empty:
        raise PreconditionError(
            "the root support set of the shrunk market is nonempty; a strictly "
            "consistent price system exists, so no arbitrage can be constructed")
    d = market.d
    zero = (Fraction(0),) * d
    H = {}
    cash = {}          # cash after trading at the node
    opened = {}
    actions = {}
    openings = []
    diagnostics = []
    for nid in shrunk.order:
        node = shrunk.nodes[nid]
        t = node.depth
        box = node.box
        prev = H.get(node.parent, zero) if node.parent is not None else zero
        V = cash[node.parent] if node.parent is not None else Fraction(0)
        was_open = opened.get(node.parent, False) if node.parent is not None else False
        ch = sup.conv_children[nid]
        margin = delta / 2 ** t
        new = zero
        if not any(prev):
            fire = (not was_open and sup[nid].empty and ch is not None and not ch.empty)
            if fire:
                sep = separating_functional(box.polytope(), ch, margin)
                if sep is None:
                    raise ArbitrageError(f"{nid}: box meets the children's hull")
                new = sep.phi
                openings.append(nid)
                actions[nid] = "open"
                was_open = True
            else:
                actions[nid] = "flat" if not was_open else "closed"
        else:
            liq = V + trade_cash(prev, zero, box.lo, box.hi)
            if liq > 0 or node.is_leaf:
                if liq <= 0:
                    raise InvariantError(f"{nid}: forced liquidation at a loss ({liq})")
                actions[nid] = "liquidate"
            elif ch is None or ch.empty:
                new = prev
                actions[nid] = "hold-vacuous"
            else:
                targets = list(ch.vertices)
                if _holds(V, prev, targets, margin):
                    new, actions[nid] = prev, "hold"
                else:
                    picked = _scaled_rebalance(V, prev, box, targets, margin, 2 * margin,
                                              diagnostics, nid)
                    ok = False
                    if picked is not None:
                        cand, label = picked
                        Vc = V + trade_cash(prev, cand, box.lo, box.hi)
                        if _holds(Vc, cand, targets, margin):
                            new, actions[nid], ok = cand, label, True
                    if not ok:
                        found = _rebalance_lp(V, prev, box, targets, margin)
                        if found is None:
                            raise ArbitrageError(f"{nid}: no admissible rebalance exists")
                        new, actions[nid] = found[0], "rebalance-lp"
        if node.is_leaf:
            new = zero
        cash[nid] = V + trade_cash(prev, new, box.lo, box.hi)
        if any(new):
            H[nid] = tuple(new)
            if ch is not None and not ch.empty:
                for s in ch.vertices:
                    if cash[nid] + dot(new, s) < margin:
                        raise InvariantError(
                            f"{nid}: running value plus position falls below {margin}")
        opened[nid] = was_open
    raw_values = {l: cash[l] for l in shrunk.leaves}
    for l, v in raw_values.items():
        if v <= 0:
            raise InvariantError(f"leaf {l} ends with nonpositive value {v}")
    scale = max((abs(x) for h in H.values() for x in h), default=Fraction(1))
    strategy = {n: tuple(x / scale for x in h) for n, h in H.items()}
    return ArbitrageCertificate(
        eps=eps, delta=delta, strategy=strategy, scale=scale,
        values=value(shrunk, strategy), unshrunk_values=value(market, strategy),
        openings=tuple(openings), actions=actions, tau=ss.tau(shrunk, sup),
        diagnostics=tuple(diagnostics))


# --------------------------------------------------------------------------
# verdicts
# --------------------------------------------------------------------------

def resolution_bits(market: Market) -> int:
    """Total bit-size of the box data plus depth plus 4."""
    bits = 0
    for n in market.nodes.values():
        for x in n.bid + n.ask:
            bits += abs(x.numerator).bit_length() + x.denominator.bit_length()
    return bits + market.horizon + 4


def rna_verdict(market: Market, delta=1) -> RnaVerdict:
    K = resolution_bits(market)
    probes = []

    def probe(k):
        cps = strict_cps(market, Fraction(1, 2 ** k))
        probes.append((k, cps is not None))
        return cps

    cps = probe(2)
    if cps is not None:
        return RnaVerdict(RNA, cps=cps, margin=cps.eps, resolution_bits=K, probes=tuple(probes))
    cps = probe(K)
    if cps is None:
        closed = ss.compute(market)
        cert = construct_arbitrage(market, Fraction(1, 2 ** K), delta)
        return RnaVerdict(FAILS, certificate=cert, resolution_bits=K, probes=tuple(probes),
                          resolution_sensitive=not closed[market.root].empty)
    lo, hi = 2, K       # fails at 2**-lo, works at 2**-hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        c = probe(mid)
        if c is None:
            lo = mid
        else:
            hi, cps = mid, c
    return RnaVerdict(RNA, cps=cps, margin=cps.eps, resolution_bits=K, probes=tuple(probes))


def verify_cps(market: Market, cps: ConsistentPriceSystem) -> bool:
    if not 0 < cps.eps < Fraction(1, 2):
        return False
    if set(cps.mass) != set(market.nodes) or set(cps.prices) != set(market.nodes):
        return False
    if cps.mass[market.root] != 1:
        return False
    for nid in market.order:
        node = market.nodes[nid]
        q = cps.mass[nid]
        if q < 0:
            return False
        S = cps.prices[nid]
        if len(S) != market.d or not shrink_box(node.box, cps.eps).contains(S):
            return False
        if not node.box.contains_interior(S):
            return False
        if node.is_leaf:
            continue
        if sum((cps.mass[c] for c in node.children), Fraction(0)) != q:
            return False
        if q > 0:
            for j in range(market.d):
                m = sum((cps.mass[c] * cps.prices[c][j] for c in node.children), Fraction(0))
                if m != q * S[j]:
                    return False
    return True


def verify_arbitrage(market: Market, cert: ArbitrageCertificate) -> bool:
    if not 0 < cert.eps < Fraction(1, 2):
        return False
    for nid, h in cert.strategy.items():
        if nid not in market.nodes or market.nodes[nid].is_leaf or len(h) != market.d:
            return False
    vals = value(market.shrunk(cert.eps), cert.strategy)
    return all(v > 0 for v in vals.values()) and vals == dict(cert.values)


def verify_certificate(verdict: RnaVerdict, market: Market) -> bool:
    has_cps = verdict.cps is not None
    has_arb = verdict.certificate is not None
    if has_cps == has_arb:
        return False
    if verdict.tag == RNA:
        return has_cps and verify_cps(market, verdict.cps)
    if verdict.tag == FAILS:
        return has_arb and verify_arbitrage(market, verdict.certificate)
    return False
