"""
Shared fixtures for the bautin-lab unit tests.

Modules are imported as modules.<name> with src/ on the path, the same way
src/index.py imports them.
"""

import json
import os
import sys
from fractions import Fraction

import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
sys.path.insert(0, os.path.join(ROOT, "src"))

from modules.generators import (  # noqa: E402
    CoefficientRule,
    ExponentRule,
    LacunarySpec,
    recurrence_spec_from_json,
)
from modules.series_core import ExactSeries, load_series  # noqa: E402

DATA_DIR = os.path.join(ROOT, "data")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def exp_series():
    """e^z - 1 with 101 coefficients, R = 1, B = 2."""
    return load_series(os.path.join(DATA_DIR, "e_minus_1.json"))


@pytest.fixture
def identity_series():
    """f(z) = z, the algebraic example."""
    return load_series(os.path.join(DATA_DIR, "algebraic_z.json"))


@pytest.fixture
def short_exp_series():
    """e^z - 1 through z^4, unit metadata."""
    return ExactSeries(
        coeffs=(0, 1, Fraction(1, 2), Fraction(1, 6), Fraction(1, 24)),
        radius=1,
        bound=1,
    )


@pytest.fixture
def lacunary_spec():
    """n = (2, 5, 26), a_k = 2^-k, q = 3, p = 1."""
    return LacunarySpec(
        exponent_rule=ExponentRule(kind="explicit", values=(2, 5, 26)),
        coefficient_rule=CoefficientRule(kind="geometric", ratio=Fraction(1, 2)),
        q=Fraction(3),
        p=Fraction(1),
    )


@pytest.fixture
def load_recurrence():
    """Read a recurrence spec from data/ by file name."""

    def load(name):
        with open(os.path.join(DATA_DIR, name), encoding="utf-8") as handle:
            return recurrence_spec_from_json(json.load(handle))

    return load
