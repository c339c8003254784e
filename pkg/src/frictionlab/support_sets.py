"""Backward support-set recursion, the first-failure time and the
boundary (liquidation) price process."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .geometry import Box, Polytope, hull, intersect
from .market import Market

NONE = "none"


@dataclass(frozen=True)
class SupportSets:
    """``sets[n]`` is the support set at node ``n``; ``conv_children[n]`` is the
    hull of the children's support vertices (``None`` at leaves)."""

    sets: Mapping[str, Polytope]
    conv_children: Mapping[str, Optional[Polytope]]

    def __getitem__(self, nid: str) -> Polytope:
        return self.sets[nid]

    def root_empty(self, market: Market) -> bool:
        return self.sets[market.root].empty


def compute(market: Market) -> SupportSets:
    """Leaves take their box; inner nodes intersect their box with the hull
    of everything the children can still support."""
    d = market.d
    sets, conv = {}, {}
    for nid in market.bottom_up():
        node = market.nodes[nid]
        box = node.box
        if node.is_leaf:
            sets[nid] = box.polytope()
            conv[nid] = None
            continue
        pts = [v for c in node.children for v in sets[c].vertices]
        ch = hull(pts, d) if pts else Polytope.empty_set(d)
        conv[nid] = ch
        sets[nid] = intersect(ch, box) if pts else ch
    return SupportSets(sets, conv)


def tau(market: Market, supports: SupportSets) -> dict:
    """Per leaf: the first depth on its path where the support set is empty
    while the children's hull is not, or ``"none"``."""
    out = {}
    for leaf in market.leaves:
        hit = NONE
        for nid in market.path(leaf):
            ch = supports.conv_children[nid]
            if supports.sets[nid].empty and ch is not None and not ch.empty:
                hit = market.depth(nid)
                break
        out[leaf] = hit
    return out


def tau_nodes(market: Market, supports: SupportSets) -> list:
    """Nodes where the first failure happens (the A-event sites)."""
    out = []
    for nid in market.order:
        ch = supports.conv_children[nid]
        if supports.sets[nid].empty and ch is not None and not ch.empty:
            anc = market.parent(nid)
            earlier = False
            while anc is not None:
                a_ch = supports.conv_children[anc]
                if supports.sets[anc].empty and a_ch is not None and not a_ch.empty:
                    earlier = True
                    break
                anc = market.parent(anc)
            if not earlier:
                out.append(nid)
    return out


def boundary_process(H: Sequence[Fraction], box: Box) -> tuple:
    """Liquidation prices: bid where the position is long or flat, ask where
    it is short."""
    return tuple(lo if h >= 0 else hi for h, lo, hi in zip(H, box.lo, box.hi))


def dump(market: Market, supports: SupportSets) -> dict:
    from .reports import vec
    nodes = []
    for nid in market.order:
        ch = supports.conv_children[nid]
        nodes.append({
            "id": nid,
            "support": [vec(v) for v in supports.sets[nid].vertices],
            "conv_children": None if ch is None else [vec(v) for v in ch.vertices],
        })
    return {"nodes": nodes,
            "tau": dict(tau(market, supports))}
