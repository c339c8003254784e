"""Rendering helpers: exact rationals as ``"p/q"`` strings, optional decimals."""
from __future__ import annotations

import json
from decimal import Decimal, localcontext
from fractions import Fraction

from .rational_lp import fmt


def rat(x) -> str:
    return fmt(x)


def vec(v) -> list:
    return [rat(x) for x in v]


def decimal_str(x: Fraction, digits: int) -> str:
    """``x`` rounded half-even to ``digits`` places (display only)."""
    with localcontext() as ctx:
        ctx.prec = max(30, digits + len(str(abs(x.numerator) // x.denominator)) + 5)
        q = Decimal(x.numerator) / Decimal(x.denominator)
        return str(q.quantize(Decimal(1).scaleb(-digits)))


def with_decimals(obj: dict, digits):
    """Attach a ``"decimal"`` mirror of ``obj`` in which every exact rational
    string is rounded to ``digits`` places (the exact values stay as they are;
    entries that are not rationals are left out of the mirror)."""
    if digits is None:
        return obj
    out = dict(obj)
    mirror = _mirror(obj, digits)
    if mirror is not None:
        out["decimal"] = mirror
    return out


def _mirror(v, digits):
    if _is_rat(v):
        return decimal_str(Fraction(v), digits)
    if isinstance(v, dict):
        out = {k: m for k, m in ((k, _mirror(x, digits)) for k, x in v.items()) if m is not None}
        return out or None
    if isinstance(v, list):
        items = [_mirror(x, digits) for x in v]
        return items if any(m is not None for m in items) else None
    return None


def _is_rat(s) -> bool:
    if not isinstance(s, str):
        return False
    try:
        Fraction(s)
    except (ValueError, ZeroDivisionError):
        return False
    return any(ch.isdigit() for ch in s) and "." not in s and "e" not in s.lower()


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


# --------------------------------------------------------------------------
# report builders
# --------------------------------------------------------------------------

def strategy_doc(strategy) -> dict:
    return {n: vec(h) for n, h in strategy.items()}


def trade_log(market, strategy) -> list:
    """Plain-language trades per node (buy/sell quantities per asset)."""
    from .market import position
    out = []
    for nid in market.order:
        node = market.nodes[nid]
        prev = position(market, strategy, node.parent)
        new = position(market, strategy, nid)
        for j, (a, b) in enumerate(zip(prev, new)):
            if b > a:
                out.append(f"{nid} (time {node.depth}): buy {rat(b - a)} of asset {j + 1}")
            elif b < a:
                out.append(f"{nid} (time {node.depth}): sell {rat(a - b)} of asset {j + 1}")
    return out


def cps_doc(market, cps) -> dict:
    return {
        "eps": rat(cps.eps),
        "mass": {n: rat(cps.mass[n]) for n in market.order},
        "prices": {n: vec(cps.prices[n]) for n in market.order},
        "leaf_weights": {l: rat(cps.mass[l]) for l in market.leaves},
    }


def arbitrage_doc(market, cert) -> dict:
    return {
        "eps": rat(cert.eps),
        "delta": rat(cert.delta),
        "strategy": strategy_doc(cert.strategy),
        "scale": rat(cert.scale),
        "values_shrunk": {l: rat(v) for l, v in cert.values.items()},
        "values_unshrunk": {l: rat(v) for l, v in cert.unshrunk_values.items()},
        "openings": list(cert.openings),
        "actions": dict(cert.actions),
        "tau": {l: t for l, t in cert.tau.items()},
        "trades": trade_log(market, cert.strategy),
        "diagnostics": list(cert.diagnostics),
    }


def verdict_doc(market, verdict) -> dict:
    doc = {
        "command": "check",
        "verdict": verdict.tag,
        "resolution_bits": verdict.resolution_bits,
        "probes": [{"eps": f"1/2^{k}", "strict_cps": ok} for k, ok in verdict.probes],
        "resolution_sensitive": verdict.resolution_sensitive,
        "interior_convention": verdict.interior_convention,
    }
    if verdict.cps is not None:
        doc["margin"] = rat(verdict.margin)
        doc["cps"] = cps_doc(market, verdict.cps)
    if verdict.certificate is not None:
        doc["arbitrage"] = arbitrage_doc(market, verdict.certificate)
    return doc


def omega_doc(market, om) -> dict:
    doc = {
        "command": "omega-star",
        "omega_star": list(om.leaves),
        "empty": om.empty,
        "witness_mass": {l: rat(v) for l, v in om.witness_mass.items()},
        "max_mass": {l: rat(v) for l, v in om.max_mass.items()},
    }
    if om.farkas is not None:
        doc["farkas"] = vec(om.farkas)
    return doc


def oracle_doc(market, res) -> dict:
    if not res.feasible:
        return {"command": "oracle", "value": None,
                "message": "no consistent price system", "farkas": vec(res.farkas)}
    return {
        "command": "oracle",
        "value": rat(res.value),
        "mass": {n: rat(v) for n, v in res.mass.items()},
        "prices": {n: vec(v) for n, v in res.prices.items()},
    }


def superhedge_doc(market, sol) -> dict:
    from .superhedge import EMPTY_SUPPORT, hedge_slack
    doc = {"command": "superhedge", "claim": {l: rat(v) for l, v in sol.claim.items()}}
    if sol.price is None:
        doc.update({"price": None, "message": EMPTY_SUPPORT,
                    "omega_star": list(sol.omega_star.leaves)})
        return doc
    slack = hedge_slack(market, sol)
    doc.update({
        "price": rat(sol.price),
        "xbar0": vec(sol.xbar0),
        "strategy": strategy_doc(sol.strategy),
        "price_process": {n: vec(s) for n, s in sol.S.items()},
        "running_level": {n: rat(x) for n, x in sol.X.items()},
        "omega_star": list(sol.omega_star.leaves),
        "oracle_price": None if sol.oracle.value is None else rat(sol.oracle.value),
        "oracle_mass": {n: rat(v) for n, v in sol.oracle.mass.items()},
        "oracle_prices": {n: vec(v) for n, v in sol.oracle.prices.items()},
        "duality_gap": None if sol.gap is None else rat(sol.gap),
        "hedge_slack": {l: rat(v) for l, v in slack.items()},
        "trades": trade_log(market, sol.strategy),
        "F": {n: [{"point": vec(p), "value": rat(f)} for p, f in sol.F[n].pairs]
              for n in market.order},
    })
    return doc
