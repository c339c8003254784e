from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from frictionlab import fuzz
from frictionlab.market import load

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "frictionlab" / "fixtures"

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def fixture_market(name: str):
    return load(FIXTURES / f"{name}.json")


@pytest.fixture
def single_path():
    return fixture_market("single-path")


@pytest.fixture
def binomial():
    return fixture_market("binomial")


def rationals(lo=-6, hi=6, den=4):
    return st.integers(lo * den, hi * den).map(lambda k: Fraction(k, den))


def points(dim, lo=-4, hi=4, den=2):
    return st.tuples(*[rationals(lo, hi, den)] * dim)


@st.composite
def small_markets(draw, max_depth=3, max_assets=2, max_nodes=14):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return fuzz.random_market(random.Random(seed), max_depth, max_assets, max_nodes)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
