"""Exact arbitrage detection and superhedging on finite bid-ask scenario trees."""
from __future__ import annotations

from .arbitrage import construct_arbitrage, rna_verdict, strict_cps, verify_certificate
from .market import Market, load, loads, value
from .superhedge import omega_star, oracle_price, price, superhedge

__version__ = "0.1.0"

__all__ = [
    "Market", "construct_arbitrage", "load", "loads", "omega_star", "oracle_price",
    "price", "rna_verdict", "strict_cps", "superhedge", "value", "verify_certificate",
]
