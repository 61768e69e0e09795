import random
import shutil
from fractions import Fraction

import pytest

from odeinv.lie import ODESystem

ALPHA_E = {"u": "-v + u*(1 - u^2 - v^2)/4", "v": "u + v*(1 - u^2 - v^2)/4"}


@pytest.fixture
def alpha_e():
    """The limit-cycle system whose unit circle attracts every orbit."""
    return ODESystem.from_equations(ALPHA_E)


@pytest.fixture
def rotation():
    return ODESystem.from_equations({"x": "y", "y": "-x"})


@pytest.fixture
def rng():
    return random.Random(20240517)


def rational(rng, lo=-3, hi=3, dens=(1, 2, 3, 4, 5, 7)):
    d = rng.choice(dens)
    return Fraction(rng.randint(lo * d, hi * d), d)


def pytest_configure(config):
    config.addinivalue_line("markers", "z3: needs the z3 binary on PATH")


def pytest_collection_modifyitems(config, items):
    if shutil.which("z3"):
        return
    skip = pytest.mark.skip(reason="z3 not installed")
    for item in items:
        if "z3" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        status, title, elapsed, why = RESULTS[n]
        label = f"{n:g}" if n == int(n) else f"{int(n)} (solver)"
        line = f"criterion {label}: {status}  {title}  [{elapsed:.2f}s]"
        terminalreporter.write_line(line + (f"  {why}" if why else ""))
