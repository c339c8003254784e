"""Scenario-tree markets with bid-ask boxes.

A market file is JSON::

    {"assets": 1, "horizon": 2,
     "nodes": [{"id": "0", "parent": null, "bid": ["1"], "ask": ["3"]}, ...],
     "claim": {"leafA": "1/2", ...},
     "claims": {"call": {...}},          # optional named claims
     "strategies": {"hold": {...}}}       # optional named strategies

Numbers may be JSON integers, decimals (read exactly) or ``"p/q"`` strings.
A strategy maps each non-leaf node id to the position vector carried into
the next date; nodes that are absent hold nothing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .geometry import Box, shrink_box
from .rational_lp import LinearProgram, as_rational, eq, solve

ASSUMPTION_EFFICIENT_FRICTION = "efficient friction (bid < ask in every coordinate)"


class MarketError(ValueError):
    """Malformed or invalid market data; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = "", invariant: Optional[str] = None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.invariant = invariant


@dataclass(frozen=True)
class Node:
    id: str
    parent: Optional[str]
    depth: int
    children: tuple
    bid: tuple
    ask: tuple
    pi: Optional[tuple] = None

    @property
    def box(self) -> Box:
        return Box(self.bid, self.ask)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    invariant: Optional[str] = None
    message: str = "valid"
    path: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Market:
    """Immutable scenario tree with one bid-ask box per node."""

    assets: int
    horizon: int
    nodes: Mapping[str, Node]
    order: tuple                      # breadth-first, children in input order
    claims: Mapping[str, Mapping[str, Fraction]] = field(default_factory=dict)
    strategies: Mapping[str, Mapping[str, tuple]] = field(default_factory=dict)
    name: str = ""

    @property
    def d(self) -> int:
        return self.assets

    @property
    def root(self) -> str:
        return self.order[0]

    @property
    def leaves(self) -> list:
        return [n for n in self.order if self.nodes[n].is_leaf]

    @property
    def internal(self) -> list:
        return [n for n in self.order if not self.nodes[n].is_leaf]

    def node(self, nid: str) -> Node:
        return self.nodes[nid]

    def box(self, nid: str) -> Box:
        return self.nodes[nid].box

    def children(self, nid: str) -> tuple:
        return self.nodes[nid].children

    def parent(self, nid: str) -> Optional[str]:
        return self.nodes[nid].parent

    def depth(self, nid: str) -> int:
        return self.nodes[nid].depth

    def path(self, leaf: str) -> list:
        out = [leaf]
        while self.nodes[out[-1]].parent is not None:
            out.append(self.nodes[out[-1]].parent)
        return out[::-1]

    def bottom_up(self) -> list:
        return list(reversed(self.order))

    def claim(self, name: Optional[str] = None) -> dict:
        key = "default" if name is None else name
        if key not in self.claims:
            raise MarketError(f"no claim named {key!r}", "claims")
        return dict(self.claims[key])

    def strategy(self, name: str) -> dict:
        if name == "hold":
            return zero_strategy(self)
        if name not in self.strategies:
            raise MarketError(f"no strategy named {name!r}", "strategies")
        return dict(self.strategies[name])

    def shrunk(self, eps) -> "Market":
        """Market with every box shrunk by ``eps`` of its width per side."""
        eps = as_rational(eps)
        nodes = {}
        for nid, n in self.nodes.items():
            b = shrink_box(n.box, eps)
            nodes[nid] = replace(n, bid=b.lo, ask=b.hi, pi=None)
        return replace(self, nodes=nodes)

    def with_boxes(self, boxes: Mapping[str, Box]) -> "Market":
        nodes = {nid: replace(n, bid=boxes[nid].lo, ask=boxes[nid].hi, pi=None)
                 for nid, n in self.nodes.items()}
        return replace(self, nodes=nodes)

    def to_dict(self) -> dict:
        from .reports import rat
        doc = {
            "assets": self.assets,
            "horizon": self.horizon,
            "nodes": [{"id": nid, "parent": self.nodes[nid].parent,
                       "bid": [rat(v) for v in self.nodes[nid].bid],
                       "ask": [rat(v) for v in self.nodes[nid].ask]} for nid in self.order],
        }
        if "default" in self.claims:
            doc["claim"] = {k: rat(v) for k, v in self.claims["default"].items()}
        named = {k: v for k, v in self.claims.items() if k != "default"}
        if named:
            doc["claims"] = {k: {l: rat(x) for l, x in v.items()} for k, v in named.items()}
        if self.strategies:
            doc["strategies"] = {k: {n: [rat(x) for x in h] for n, h in v.items()}
                                 for k, v in self.strategies.items()}
        return doc


# --------------------------------------------------------------------------
# ingestion and validation
# --------------------------------------------------------------------------

def _rational(value, path: str) -> Fraction:
    try:
        return as_rational(value)
    except (TypeError, ValueError) as exc:
        raise MarketError(f"expected an exact rational, got {value!r}", path) from exc


def _vector(value, d: int, path: str) -> tuple:
    if not isinstance(value, list):
        raise MarketError("expected a list of rationals", path)
    if len(value) != d:
        raise MarketError(f"expected {d} entries, got {len(value)}", path)
    return tuple(_rational(v, f"{path}[{j}]") for j, v in enumerate(value))


def loads_exact(text: str):
    """JSON with decimals read as exact Fractions."""
    return json.loads(text, parse_float=Fraction)


def validate(doc) -> ValidationReport:
    """Check a raw market document; names the first violated invariant."""
    try:
        _build(doc)
    except MarketError as exc:
        return ValidationReport(False, exc.invariant or "well-formed input",
                                str(exc), exc.path)
    return ValidationReport(True)


def _build(doc, name: str = "") -> Market:
    if isinstance(doc, Market):
        doc = doc.to_dict()
    if not isinstance(doc, dict):
        raise MarketError("market document must be an object")
    for key in ("assets", "horizon", "nodes"):
        if key not in doc:
            raise MarketError("missing field", key)
    d, T = doc["assets"], doc["horizon"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise MarketError("must be a positive integer", "assets")
    if isinstance(T, bool) or not isinstance(T, int) or T < 0:
        raise MarketError("must be a nonnegative integer", "horizon")
    raw = doc["nodes"]
    if not isinstance(raw, list) or not raw:
        raise MarketError("must be a nonempty list", "nodes")

    specs = {}
    input_order = []
    for i, entry in enumerate(raw):
        p = f"nodes[{i}]"
        if not isinstance(entry, dict):
            raise MarketError("expected an object", p)
        for key in ("id", "bid", "ask"):
            if key not in entry:
                raise MarketError("missing field", f"{p}.{key}")
        nid = str(entry["id"])
        if nid in specs:
            raise MarketError(f"duplicate node id {nid!r}", f"{p}.id", "unique node ids")
        parent = entry.get("parent")
        parent = None if parent is None else str(parent)
        bid = _vector(entry["bid"], d, f"{p}.bid")
        ask = _vector(entry["ask"], d, f"{p}.ask")
        pi = None
        if entry.get("pi") is not None:
            mat = entry["pi"]
            if not isinstance(mat, list) or len(mat) != d + 1:
                raise MarketError(f"expected a {d + 1}x{d + 1} matrix", f"{p}.pi")
            pi = tuple(_vector(r, d + 1, f"{p}.pi[{k}]") for k, r in enumerate(mat))
        specs[nid] = (parent, bid, ask, pi, p)
        input_order.append(nid)

    roots = [n for n in input_order if specs[n][0] is None]
    if len(roots) != 1:
        raise MarketError(f"expected exactly one root, found {len(roots)}", "nodes",
                          "single root at depth 0")
    children = {n: [] for n in input_order}
    for n in input_order:
        parent, *_, p = specs[n]
        if parent is not None:
            if parent not in specs:
                raise MarketError(f"unknown parent {parent!r}", f"{p}.parent",
                                  "parents exist")
            children[parent].append(n)

    depth = {roots[0]: 0}
    order = [roots[0]]
    k = 0
    while k < len(order):
        n = order[k]
        for c in children[n]:
            depth[c] = depth[n] + 1
            order.append(c)
        k += 1
    if len(order) != len(input_order):
        stray = next(n for n in input_order if n not in depth)
        raise MarketError(f"node {stray!r} is not reachable from the root",
                          f"{specs[stray][4]}.parent", "tree is connected and acyclic")

    for n in order:
        p = specs[n][4]
        if depth[n] > T:
            raise MarketError(f"node {n!r} has depth {depth[n]} beyond horizon {T}", p,
                              "every leaf has depth T")
        if not children[n] and depth[n] != T:
            raise MarketError(f"leaf {n!r} has depth {depth[n]}, horizon is {T}", p,
                              "every leaf has depth T")

    for n in order:
        _, bid, ask, pi, p = specs[n]
        for j in range(d):
            if not bid[j] < ask[j]:
                raise MarketError(
                    f"bid {bid[j]} is not strictly below ask {ask[j]} (violates "
                    f"{ASSUMPTION_EFFICIENT_FRICTION})", f"{p}.bid[{j}]",
                    ASSUMPTION_EFFICIENT_FRICTION)

    nodes = {n: Node(n, specs[n][0], depth[n], tuple(children[n]), specs[n][1], specs[n][2],
                     specs[n][3]) for n in order}
    leaves = [n for n in order if not children[n]]

    def claim_map(obj, path):
        if not isinstance(obj, dict):
            raise MarketError("expected an object mapping leaf ids to payoffs", path)
        out = {}
        for key, val in obj.items():
            if key not in nodes or nodes[key].children:
                raise MarketError(f"{key!r} is not a leaf", f"{path}.{key}",
                                  "claims are defined on leaves")
            out[key] = _rational(val, f"{path}.{key}")
        missing = [l for l in leaves if l not in out]
        if missing:
            raise MarketError(f"no payoff for leaf {missing[0]!r}", path,
                              "claims are finite at every leaf")
        return out

    claims = {}
    if doc.get("claim") is not None:
        claims["default"] = claim_map(doc["claim"], "claim")
    for cname, obj in (doc.get("claims") or {}).items():
        claims[cname] = claim_map(obj, f"claims.{cname}")

    strategies = {}
    for sname, obj in (doc.get("strategies") or {}).items():
        strategies[sname] = _strategy_map(obj, nodes, d, f"strategies.{sname}")

    return Market(d, T, nodes, tuple(order), claims, strategies, name)


def _strategy_map(obj, nodes, d, path):
    if not isinstance(obj, dict):
        raise MarketError("expected an object mapping node ids to positions", path)
    out = {}
    for key, val in obj.items():
        if key not in nodes:
            raise MarketError(f"unknown node {key!r}", f"{path}.{key}")
        if nodes[key].is_leaf:
            raise MarketError(f"leaf {key!r} cannot carry a position (H at T+1 is 0)",
                              f"{path}.{key}", "strategies are predictable")
        out[key] = _vector(val, d, f"{path}.{key}")
    return out


def from_dict(doc, name: str = "") -> Market:
    return _build(doc, name)


def loads(text: str, name: str = "") -> Market:
    try:
        doc = loads_exact(text)
    except json.JSONDecodeError as exc:
        raise MarketError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return _build(doc, name)


def load(path) -> Market:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), path.stem)


def load_strategy(market: Market, source) -> dict:
    """Strategy from a dict or a JSON file path."""
    if isinstance(source, (str, Path)):
        try:
            obj = loads_exact(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MarketError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    else:
        obj = source
    return _strategy_map(obj, market.nodes, market.d, "strategy")


def load_claim(market: Market, source) -> dict:
    if isinstance(source, (str, Path)):
        obj = loads_exact(Path(source).read_text(encoding="utf-8"))
    else:
        obj = source
    doc = market.to_dict()
    doc["claim"] = obj
    return _build(doc).claims["default"]


# --------------------------------------------------------------------------
# strategies, values and integrals
# --------------------------------------------------------------------------

def zero_strategy(market: Market) -> dict:
    z = (Fraction(0),) * market.d
    return {n: z for n in market.internal}


def position(market: Market, H: Mapping, nid: Optional[str]) -> tuple:
    """Position carried out of ``nid``; zero at leaves and before the root."""
    if nid is None or market.nodes[nid].is_leaf:
        return (Fraction(0),) * market.d
    return tuple(H.get(nid, (Fraction(0),) * market.d))


def trade_cash(prev: Sequence, new: Sequence, bid: Sequence, ask: Sequence) -> Fraction:
    """Cash received when moving from ``prev`` to ``new``: buys at the ask,
    sells at the bid, nothing when the position is unchanged."""
    total = Fraction(0)
    for hp, hn, b, a in zip(prev, new, bid, ask):
        if hp < hn:
            total += (hp - hn) * a
        elif hp > hn:
            total += (hp - hn) * b
    return total


def node_cash(market: Market, H: Mapping, nid: str) -> Fraction:
    n = market.nodes[nid]
    return trade_cash(position(market, H, n.parent), position(market, H, nid), n.bid, n.ask)


def value(market: Market, H: Mapping) -> dict:
    """Terminal wealth per leaf, starting from nothing and ending flat."""
    cash = {}
    for nid in market.order:
        n = market.nodes[nid]
        base = Fraction(0) if n.parent is None else cash[n.parent]
        cash[nid] = base + node_cash(market, H, nid)
    return {l: cash[l] for l in market.leaves}


def running_value(market: Market, H: Mapping) -> dict:
    """Cumulative cash after trading at each node (positions not marked)."""
    cash = {}
    for nid in market.order:
        n = market.nodes[nid]
        base = Fraction(0) if n.parent is None else cash[n.parent]
        cash[nid] = base + node_cash(market, H, nid)
    return cash


def frictionless_integral(market: Market, H: Mapping, S: Mapping) -> dict:
    """``sum_t H_t . (S_t - S_{t-1})`` along every root-to-leaf path."""
    acc = {}
    for nid in market.order:
        n = market.nodes[nid]
        if n.parent is None:
            acc[nid] = Fraction(0)
            continue
        h = position(market, H, n.parent)
        acc[nid] = acc[n.parent] + sum(
            (hj * (a - b) for hj, a, b in zip(h, S[nid], S[n.parent]) if hj), Fraction(0))
    return {l: acc[l] for l in market.leaves}


# --------------------------------------------------------------------------
# solvency cones
# --------------------------------------------------------------------------

def exchange_matrix(node: Node) -> tuple:
    """``pi[i][j]``: units of asset ``i`` paid for one unit of ``j``; index 0
    is the numeraire. Uses the node's own matrix when one was supplied."""
    if node.pi is not None:
        return node.pi
    d = len(node.bid)
    for j, b in enumerate(node.bid):
        if b <= 0:
            raise MarketError(
                f"numeraire-mode exchange rates need positive bids; asset {j + 1} bid is {b}")
    prices = (Fraction(1),) + tuple(node.ask)
    inv_bid = (Fraction(1),) + tuple(1 / b for b in node.bid)
    # pi^{i0} = 1/bid_i, pi^{0j} = ask_j, pi^{ij} = pi^{i0} pi^{0j}
    return tuple(tuple(Fraction(1) if i == j else inv_bid[i] * prices[j]
                       for j in range(d + 1)) for i in range(d + 1))


def cone_generators(pi: Sequence[Sequence[Fraction]]) -> list:
    n = len(pi)
    gens = []
    for i in range(n):
        e = [Fraction(0)] * n
        e[i] = Fraction(1)
        gens.append(tuple(e))
    for i in range(n):
        for j in range(n):
            if i != j:
                g = [Fraction(0)] * n
                g[i] += pi[i][j]
                g[j] -= 1
                gens.append(tuple(g))
    return gens


def in_minus_cone(z: Sequence, pi) -> bool:
    """Whether the portfolio change ``z`` (numeraire first) lies in ``-K``."""
    gens = cone_generators(pi)
    k = len(gens)
    rows = [eq([g[i] for g in gens], -z[i]) for i in range(len(z))]
    out = solve(LinearProgram((0,) * k, rows, "min", ((0, None),) * k))
    return out.optimal


def rebalance_vector(market: Market, H: Mapping, nid: str) -> tuple:
    n = market.nodes[nid]
    prev, new = position(market, H, n.parent), position(market, H, nid)
    cash = trade_cash(prev, new, n.bid, n.ask)
    return (cash,) + tuple(b - a for a, b in zip(prev, new))


def solvency_check(market: Market, H: Mapping) -> dict:
    """Per node: does the rebalance, with its cash leg, lie in ``-K``?"""
    return {nid: in_minus_cone(rebalance_vector(market, H, nid),
                               exchange_matrix(market.nodes[nid]))
            for nid in market.order}
