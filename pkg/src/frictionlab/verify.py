"""Offline re-verification of reports.

Only the LP kernel and the market model are used here: certificates are
re-checked by substitution (and, for the efficient support, by re-solving
the small mass LPs), never by re-running the engine that produced them.
"""
from __future__ import annotations

from fractions import Fraction

from .market import Market, value
from .rational_lp import LinearProgram, eq, ge, le, solve


def _r(s) -> Fraction:
    return Fraction(s)


def _v(xs) -> tuple:
    return tuple(Fraction(x) for x in xs)


def check_cps(market: Market, doc: dict) -> list:
    errs = []
    eps = _r(doc["eps"])
    mass = {n: _r(v) for n, v in doc["mass"].items()}
    prices = {n: _v(v) for n, v in doc["prices"].items()}
    if not 0 < eps < Fraction(1, 2):
        errs.append("margin outside (0, 1/2)")
    if set(mass) != set(market.nodes):
        return errs + ["mass is not given on every node"]
    if mass[market.root] != 1:
        errs.append("root mass is not 1")
    for nid in market.order:
        node = market.nodes[nid]
        S = prices[nid]
        for j in range(market.d):
            w = node.ask[j] - node.bid[j]
            if not node.bid[j] + eps * w <= S[j] <= node.ask[j] - eps * w:
                errs.append(f"{nid}: price of asset {j + 1} not inside the shrunk box")
        if mass[nid] < 0:
            errs.append(f"{nid}: negative mass")
        if node.children:
            if sum((mass[c] for c in node.children), Fraction(0)) != mass[nid]:
                errs.append(f"{nid}: mass not conserved")
            if mass[nid] > 0:
                for j in range(market.d):
                    tot = sum((mass[c] * prices[c][j] for c in node.children), Fraction(0))
                    if tot != mass[nid] * S[j]:
                        errs.append(f"{nid}: martingale identity fails for asset {j + 1}")
    return errs


def check_arbitrage(market: Market, doc: dict) -> list:
    eps = _r(doc["eps"])
    if not 0 < eps < Fraction(1, 2):
        return ["shrink parameter outside (0, 1/2)"]
    strategy = {n: _v(h) for n, h in doc["strategy"].items()}
    for n in strategy:
        if n not in market.nodes or market.nodes[n].is_leaf:
            return [f"strategy holds a position at {n!r}, which is not a trading date"]
    shrunk = market.shrunk(eps)
    vals = value(shrunk, strategy)
    errs = [f"{l}: value {v} is not positive" for l, v in vals.items() if v <= 0]
    claimed = {l: _r(v) for l, v in doc.get("values_shrunk", {}).items()}
    if claimed and claimed != vals:
        errs.append("reported leaf values do not match the recomputed ones")
    return errs


def _mass_lp(market: Market, objective):
    idx = {n: k for k, n in enumerate(market.order)}
    d = market.d
    w = 1 + d
    nv = w * len(idx)
    rows = []

    def row(entries):
        r = [0] * nv
        for k, v in entries:
            r[k] += v
        return r

    rows.append(eq(row([(w * idx[market.root], 1)]), 1))
    for n in market.order:
        node = market.nodes[n]
        q = w * idx[n]
        if node.children:
            rows.append(eq(row([(q, 1)] + [(w * idx[c], -1) for c in node.children]), 0))
            for j in range(d):
                rows.append(eq(row([(q + 1 + j, 1)] + [(w * idx[c] + 1 + j, -1)
                                                      for c in node.children]), 0))
        for j in range(d):
            rows.append(ge(row([(q + 1 + j, 1), (q, -node.bid[j])]), 0))
            rows.append(le(row([(q + 1 + j, 1), (q, -node.ask[j])]), 0))
    obj = [0] * nv
    for n, c in objective.items():
        obj[w * idx[n]] = c
    bounds = []
    for _ in market.order:
        bounds += [(0, None)] + [(None, None)] * d
    return LinearProgram(tuple(obj), rows, "max", tuple(bounds)), idx, w


def check_superhedge(market: Market, doc: dict) -> list:
    errs = []
    g = {l: _r(v) for l, v in doc["claim"].items()}
    if doc.get("price") is None:
        lp, _, _ = _mass_lp(market, {})
        if solve(lp).optimal:
            errs.append("price reported as -inf but a consistent price system exists")
        return errs
    m = _r(doc["price"])
    strategy = {n: _v(h) for n, h in doc["strategy"].items()}
    omega = set(doc["omega_star"])
    vals = value(market, strategy)
    for l in omega:
        if m + vals[l] < g[l]:
            errs.append(f"{l}: superhedge fails ({m} + {vals[l]} < {g[l]})")
    for l in market.leaves:
        if l in omega:
            continue
        lp, idx, w = _mass_lp(market, {l: 1})
        out = solve(lp)
        if out.optimal and out.value > 0:
            errs.append(f"{l}: excluded from the efficient support but can be charged")
    # the oracle optimiser must be a consistent price system with value m
    mass = {n: _r(v) for n, v in doc["oracle_mass"].items()}
    prices = {n: _v(v) for n, v in doc["oracle_prices"].items()}
    if mass.get(market.root) != 1:
        errs.append("oracle optimiser: root mass is not 1")
    for n in market.order:
        node = market.nodes[n]
        q = mass.get(n, Fraction(0))
        if q < 0:
            errs.append(f"oracle optimiser: negative mass at {n}")
        if q > 0:
            S = prices[n]
            if not all(b <= s <= a for b, s, a in zip(node.bid, S, node.ask)):
                errs.append(f"oracle optimiser: price at {n} outside the box")
            if node.children:
                if sum((mass.get(c, Fraction(0)) for c in node.children), Fraction(0)) != q:
                    errs.append(f"oracle optimiser: mass not conserved at {n}")
                for j in range(market.d):
                    tot = sum((mass[c] * prices[c][j] for c in node.children
                               if mass.get(c, 0) > 0), Fraction(0))
                    if tot != q * S[j]:
                        errs.append(f"oracle optimiser: martingale identity fails at {n}")
    dual = sum((mass.get(l, Fraction(0)) * g[l] for l in market.leaves), Fraction(0))
    if dual != m:
        errs.append(f"duality gap {m - dual} is not zero")
    if doc.get("duality_gap") not in (None, "0"):
        errs.append("reported duality gap is not 0")
    return errs


def check_report(market: Market, doc: dict) -> list:
    """List of failures (empty when the report verifies)."""
    cmd = doc.get("command")
    if cmd == "check":
        has_cps, has_arb = "cps" in doc, "arbitrage" in doc
        if has_cps == has_arb:
            return ["exactly one of a price system or an arbitrage must be present"]
        if has_cps:
            return check_cps(market, doc["cps"])
        return check_arbitrage(market, doc["arbitrage"])
    if cmd == "cps":
        return check_cps(market, doc["cps"]) if doc.get("cps") else []
    if cmd == "arbitrage":
        return check_arbitrage(market, doc["arbitrage"])
    if cmd == "superhedge":
        return check_superhedge(market, doc)
    if cmd == "value":
        strategy = {n: _v(h) for n, h in doc["strategy"].items()}
        vals = value(market, strategy)
        if {l: _r(v) for l, v in doc["values"].items()} != vals:
            return ["leaf values do not match"]
        return []
    if cmd == "oracle":
        if doc.get("value") is None:
            lp, _, _ = _mass_lp(market, {})
            return ["consistent price system exists"] if solve(lp).optimal else []
        g = {l: _r(v) for l, v in doc["claim"].items()}
        lp, idx, w = _mass_lp(market, g)
        out = solve(lp)
        return [] if out.optimal and out.value == _r(doc["value"]) else ["oracle value differs"]
    if cmd == "omega-star":
        errs = []
        for l in market.leaves:
            lp, idx, w = _mass_lp(market, {l: 1})
            out = solve(lp)
            member = out.optimal and out.value > 0
            if member != (l in doc["omega_star"]):
                errs.append(f"{l}: membership differs")
        return errs
    return [f"unknown report kind {cmd!r}"]
