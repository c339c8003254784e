"""Command-line front end.

Every subcommand prints a JSON report on stdout. Exact values are written as
``"p/q"`` strings; ``--decimal k`` adds rounded companions for reading.

Exit codes: 0 success (or robust no-arbitrage holds), 10 arbitrage found,
11 empty efficient support, 2 input error, 1 failed verification or fuzz
violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import arbitrage as arb
from . import fuzz, reports, verify
from .market import MarketError, load, load_claim, load_strategy, solvency_check, value
from .rational_lp import LpInputError, as_rational
from .superhedge import omega_star, oracle_price, superhedge

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_ARBITRAGE = 10
EXIT_EMPTY_SUPPORT = 11

FIXTURES = Path(__file__).parent / "fixtures"


class InputError(Exception):
    pass


def resolve_market_path(name: str) -> Path:
    """Path as given, then with ``.json`` appended, then a bundled fixture."""
    p = Path(name)
    for cand in (p, p.with_name(p.name + ".json")):
        if cand.is_file():
            return cand
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    bundled = FIXTURES / f"{stem}.json"
    if bundled.is_file():
        return bundled
    raise InputError(f"{name}: no such market file or bundled fixture")


def _market(name):
    return load(resolve_market_path(name))


def _rational_arg(text: Optional[str], what: str):
    if text is None:
        return None
    try:
        return as_rational(text)
    except (LpInputError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"--{what}: {text!r} is not an exact rational") from exc


def _claim(market, source):
    if source is None:
        return market.claim()
    if source in market.claims:
        return market.claim(source)
    if Path(source).is_file():
        return load_claim(market, source)
    raise InputError(f"--claim: {source!r} is neither a named claim nor a file")


def _strategy(market, source):
    if source is None:
        raise InputError("value needs --strategy (a name, 'hold' or a JSON file)")
    if source == "hold" or source in market.strategies:
        return market.strategy(source)
    if Path(source).is_file():
        return load_strategy(market, source)
    raise InputError(f"--strategy: {source!r} is neither a named strategy nor a file")


# --------------------------------------------------------------------------
# subcommands: each returns (report, exit code)
# --------------------------------------------------------------------------

def cmd_check(args):
    market = _market(args.market)
    eps = _rational_arg(args.eps, "eps")
    delta = _rational_arg(args.delta, "delta") or 1
    if eps is None:
        verdict = arb.rna_verdict(market, delta)
        doc = reports.verdict_doc(market, verdict)
        code = EXIT_OK if verdict.holds else EXIT_ARBITRAGE
        return market, doc, code
    cps = arb.strict_cps(market, eps)
    doc = {"command": "check", "eps": reports.rat(eps)}
    if cps is not None:
        doc.update({"verdict": arb.RNA, "margin": reports.rat(eps),
                    "cps": reports.cps_doc(market, cps)})
        return market, doc, EXIT_OK
    cert = arb.construct_arbitrage(market, eps, delta)
    doc.update({"verdict": "ArbitrageAtEps", "arbitrage": reports.arbitrage_doc(market, cert)})
    return market, doc, EXIT_ARBITRAGE


def cmd_cps(args):
    market = _market(args.market)
    eps = _rational_arg(args.eps, "eps")
    if eps is None:
        verdict = arb.rna_verdict(market)
        cps = verdict.cps
    else:
        cps = arb.strict_cps(market, eps)
    if cps is None:
        return market, {"command": "cps", "cps": None,
                        "message": "no strictly consistent price system"}, EXIT_ARBITRAGE
    return market, {"command": "cps", "cps": reports.cps_doc(market, cps)}, EXIT_OK


def cmd_superhedge(args):
    market = _market(args.market)
    sol = superhedge(market, _claim(market, args.claim))
    doc = reports.superhedge_doc(market, sol)
    return market, doc, EXIT_EMPTY_SUPPORT if sol.price is None else EXIT_OK


def cmd_omega_star(args):
    market = _market(args.market)
    om = omega_star(market)
    return market, reports.omega_doc(market, om), EXIT_EMPTY_SUPPORT if om.empty else EXIT_OK


def cmd_oracle(args):
    market = _market(args.market)
    g = _claim(market, args.claim)
    res = oracle_price(market, g)
    doc = reports.oracle_doc(market, res)
    doc["claim"] = {l: reports.rat(v) for l, v in g.items()}
    return market, doc, EXIT_OK if res.feasible else EXIT_EMPTY_SUPPORT


def cmd_value(args):
    market = _market(args.market)
    H = _strategy(market, args.strategy)
    doc = {
        "command": "value",
        "strategy": reports.strategy_doc(H),
        "values": {l: reports.rat(v) for l, v in value(market, H).items()},
        "self_financing": solvency_check(market, H),
        "trades": reports.trade_log(market, H),
    }
    return market, doc, EXIT_OK


def cmd_fuzz(args):
    workers = threads_from_env()
    summary = fuzz.run(seed=args.seed, n=args.n, workers=workers)
    return None, summary.to_dict(), EXIT_OK if summary.ok else EXIT_FAILED


COMMANDS = {
    "check": cmd_check,
    "cps": cmd_cps,
    "superhedge": cmd_superhedge,
    "omega-star": cmd_omega_star,
    "oracle": cmd_oracle,
    "value": cmd_value,
    "fuzz": cmd_fuzz,
}


def threads_from_env() -> int:
    raw = os.environ.get("FRICTIONLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"FRICTIONLAB_THREADS must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frictionlab",
        description="Exact arbitrage and superhedging checks for bid-ask scenario trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, market=True):
        if market:
            p.add_argument("market", help="market JSON file or bundled fixture name")
        p.add_argument("--decimal", type=int, metavar="K",
                       help="add K-digit decimal renderings next to exact values")
        p.add_argument("--verify", nargs="?", const=True, default=None, metavar="REPORT",
                       help="re-check the produced report (or the given report file) "
                            "using only the LP kernel and the market model")
        p.add_argument("-o", "--output", help="write the report here instead of stdout")

    p = sub.add_parser("check", help="robust no-arbitrage verdict with a certificate")
    common(p)
    p.add_argument("--eps", metavar="P/Q", help="fixed shrink parameter in (0, 1/2)")
    p.add_argument("--delta", metavar="P/Q", help="arbitrage gain scale (default 1)")

    p = sub.add_parser("cps", help="strictly consistent price system")
    common(p)
    p.add_argument("--eps", metavar="P/Q", help="fixed shrink parameter in (0, 1/2)")

    for name, helptext in (("superhedge", "superhedging price and strategy"),
                           ("oracle", "CPS linear program value of a claim")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--claim", help="named claim in the market file, or a JSON file")

    p = sub.add_parser("omega-star", help="leaves charged by some consistent price system")
    common(p)

    p = sub.add_parser("value", help="terminal value of a strategy")
    common(p)
    p.add_argument("--strategy", help="named strategy, 'hold', or a JSON file")

    p = sub.add_parser("fuzz", help="random-market invariant checks")
    common(p, market=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-n", type=int, default=100, help="number of markets")
    return parser


def _emit(doc, args):
    text = reports.dumps(reports.with_decimals(doc, args.decimal))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _verify_file(args) -> int:
    market = _market(args.market)
    try:
        doc = json.loads(Path(args.verify).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"--verify: cannot read report: {exc}") from exc
    errs = verify.check_report(market, doc)
    _emit({"command": "verify", "report": str(args.verify), "ok": not errs,
           "failures": errs}, args)
    return EXIT_OK if not errs else EXIT_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if isinstance(args.verify, str) and args.command != "fuzz":
            return _verify_file(args)
        market, doc, code = COMMANDS[args.command](args)
        if args.verify and market is not None:
            errs = verify.check_report(market, doc)
            doc["verified"] = not errs
            if errs:
                doc["verification_failures"] = errs
                code = EXIT_FAILED
    except (InputError, MarketError, LpInputError) as exc:
        print(f"frictionlab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except arb.PreconditionError as exc:
        print(f"frictionlab: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(doc, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
