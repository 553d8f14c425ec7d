"""Shared fixtures: small Chow data reused across the suite."""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from blowup import blow_up  # noqa: E402
from chowring import ChowDatum, point_class, product, projective_space, quotient, swap_action  # noqa: E402


@pytest.fixture(scope="session")
def p1():
    return projective_space(1)


@pytest.fixture(scope="session")
def p2():
    return projective_space(2)


@pytest.fixture(scope="session")
def p3():
    return projective_space(3)


@pytest.fixture(scope="session")
def p1xp1(p1):
    return product(p1, p1)


@pytest.fixture(scope="session")
def sym2(p1xp1):
    """(quotient datum, quotient map) for the factor swap on P^1 x P^1."""
    return quotient(swap_action(p1xp1))


@pytest.fixture(scope="session")
def bl_p2(p2):
    return blow_up(p2, point_class(p2), -1)


@pytest.fixture(scope="session")
def bl_p3(p3):
    return blow_up(p3, point_class(p3), -1)


@pytest.fixture(scope="session")
def mock_curve():
    """A one-dimensional datum without Künneth data, not cellular."""
    mult = {(0, 0): [[(1,)]], (0, 1): [[(1,)]], (1, 0): [[(1,)]]}
    return ChowDatum("C", 1, [["1"], ["x"]], mult, (1,))
