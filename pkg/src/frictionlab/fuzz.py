"""Seeded random markets and the invariant checks run over them."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import arbitrage as arb
from .market import Market, from_dict
from .superhedge import (cps_lp_feasible, direction_consistent, hedge_slack,
                         superhedge)

BRANCHING = (1, 2, 3)
BRANCH_WEIGHTS = (2, 2, 1)
CROSS_CHECK_FULL_NODES = 12
CROSS_CHECK_EPS = Fraction(1, 2 ** 16)


def _rat(rng: random.Random, lo: int, hi: int, den: int = 4) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), den)


def random_market(rng: random.Random, max_depth: int = 4, max_assets: int = 2,
                  max_nodes: int = 40) -> Market:
    """Random tree of depth at most ``max_depth``, branching at most 3.

    Prices follow a random walk with random spreads, so both outcomes of the
    arbitrage dichotomy show up with useful frequency.
    """
    d = rng.randint(1, max_assets)
    T = rng.randint(1, max_depth)
    nodes = []
    count = [0]

    def box(center):
        bid, ask = [], []
        for c in center:
            w = _rat(rng, 0, 2) + Fraction(1, 4)
            lo = max(c - w / 2, Fraction(1, 4))
            bid.append(lo)
            ask.append(lo + w)
        return bid, ask

    def grow(nid, parent, depth, center):
        bid, ask = box(center)
        nodes.append({"id": nid, "parent": parent, "bid": bid, "ask": ask})
        if depth == T:
            return
        k = rng.choices(BRANCHING, BRANCH_WEIGHTS)[0]
        room = max(1, (max_nodes - count[0]) // (T - depth + 1))
        k = min(k, room)
        for i in range(k):
            count[0] += 1
            step = [c + _rat(rng, -2, 2) for c in center]
            grow(f"{nid}.{i}", nid, depth + 1, [max(s, Fraction(1)) for s in step])

    grow("r", None, 0, [_rat(rng, 3, 8) for _ in range(d)])
    leaves = [n["id"] for n in nodes if not any(m["parent"] == n["id"] for m in nodes)]
    claim = {l: _rat(rng, -5, 5) for l in leaves}
    return from_dict({"assets": d, "horizon": T, "nodes": nodes, "claim": claim},
                     f"fuzz-{rng.random():.6f}")


@dataclass
class FuzzSummary:
    seed: int
    markets: int = 0
    rna: int = 0
    fails: int = 0
    duality_checked: int = 0
    violations: list = field(default_factory=list)
    smallest_failure: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"command": "fuzz", "seed": self.seed, "markets": self.markets,
                "robust_no_arbitrage": self.rna, "fails": self.fails,
                "duality_checked": self.duality_checked,
                "violations": list(self.violations), "ok": self.ok,
                "smallest_failure": self.smallest_failure}


def check_dichotomy(market: Market, verdict=None) -> list:
    """Exactly one of a strict CPS and an arbitrage exists, cross-checked
    against a direct LP on the shrunk market."""
    errs = []
    v = verdict or arb.rna_verdict(market)
    if (v.cps is None) == (v.certificate is None):
        errs.append("verdict must carry exactly one certificate")
        return errs
    if not arb.verify_certificate(v, market):
        errs.append("certificate does not verify")
    if v.tag == arb.RNA:
        if not cps_lp_feasible(market.shrunk(v.margin)):
            errs.append("cps reported but the shrunk LP is infeasible")
        try:
            arb.construct_arbitrage(market, v.margin)
            errs.append("arbitrage built although a strict cps exists")
        except arb.PreconditionError:
            pass
    else:
        # An arbitrage at a fine shrink is also one at every coarser shrink,
        # so any eps at least the certificate's must give an infeasible LP.
        # Full resolution is used on small trees only: the 2^-K data make
        # the LP slow on large ones.
        eps = v.certificate.eps
        if len(market.nodes) > CROSS_CHECK_FULL_NODES:
            eps = max(eps, CROSS_CHECK_EPS)
        if cps_lp_feasible(market.shrunk(eps)):
            errs.append("arbitrage reported but the shrunk LP is feasible")
    return errs


def check_duality(market: Market, g) -> Optional[list]:
    """``None`` when the efficient support is empty (nothing to check)."""
    sol = superhedge(market, g)
    if sol.omega_star.empty:
        return None if sol.price is None else ["price finite but efficient support empty"]
    errs = []
    if sol.price is None:
        return ["efficient support nonempty but price is -inf"]
    if sol.gap != 0:
        errs.append(f"duality gap {sol.gap}")
    slack = hedge_slack(market, sol)
    bad = [l for l in sol.omega_star.leaves if slack[l] < 0]
    if bad:
        errs.append(f"superhedge fails on {bad}")
    if not direction_consistent(market, sol.S, sol.strategy):
        errs.append("trade directions inconsistent with price process")
    return errs


def _record(summary, market, what, errs):
    for e in errs:
        summary.violations.append(f"{market.name}: {what}: {e}")
    size = len(market.nodes)
    cur = summary.smallest_failure
    if errs and (cur is None or size < len(cur["nodes"])):
        summary.smallest_failure = market.to_dict()


def _check_one(job):
    """One isolated fuzz iteration (picklable for worker processes)."""
    market, dichotomy, duality = job
    out = {"tag": None, "dichotomy": [], "duality": None}
    if dichotomy:
        verdict = arb.rna_verdict(market)
        out["tag"] = verdict.tag
        out["dichotomy"] = check_dichotomy(market, verdict)
    if duality:
        out["duality"] = check_duality(market, market.claim())
    return out


def _results(jobs, workers):
    if workers <= 1:
        for job in jobs:
            yield job[0], _check_one(job)
        return
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        batch = []
        for job in jobs:
            batch.append(job)
            if len(batch) == 4 * workers:
                yield from zip((j[0] for j in batch), pool.map(_check_one, batch))
                batch = []
        if batch:
            yield from zip((j[0] for j in batch), pool.map(_check_one, batch))


def run(seed: int = 0, n: int = 200, dichotomy: bool = True, duality: bool = True,
        duality_target: Optional[int] = None, max_markets: Optional[int] = None,
        workers: int = 1) -> FuzzSummary:
    """Check ``n`` random markets; with ``duality_target`` keep drawing until
    that many markets with a nonempty efficient support were checked.

    Markets are drawn from ``random.Random(seed)`` in a fixed order and results
    are consumed in that order, so the summary does not depend on ``workers``.
    """
    rng = random.Random(seed)
    summary = FuzzSummary(seed)
    if duality_target is None:
        limit = n
    else:
        limit = max_markets if max_markets is not None else 20 * max(duality_target, 1)

    def jobs():
        for _ in range(limit):
            yield random_market(rng), dichotomy, duality

    for market, res in _results(jobs(), workers):
        if duality_target is not None and summary.duality_checked >= duality_target:
            break
        summary.markets += 1
        if dichotomy:
            _record(summary, market, "dichotomy", res["dichotomy"])
            if res["tag"] == arb.RNA:
                summary.rna += 1
            else:
                summary.fails += 1
        if res["duality"] is not None:
            summary.duality_checked += 1
            _record(summary, market, "duality", res["duality"])
    return summary
