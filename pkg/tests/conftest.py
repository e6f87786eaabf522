from fractions import Fraction

import pytest

from nodal_heights.nonarch import EllipticCurveQ


def _pt(P):
    return None if P is None else tuple(Fraction(c) for c in P)


# (label, curve, P, Q, u, v); u, v = None means the default coordinate
ELLIPTIC_FIXTURES = [
    ("37a-generator", [0, 0, 1, -1, 0], (0, 0), None, None, None),
    ("37a-iota", [0, 0, 1, -1, 0], (0, 0), (6, 14), "3*x", "y - 14"),
    ("I5-at-3", [0, 1, 1, -10, 10], (-4, 1), None, None, None),
    ("I7-at-3", [0, 1, 1, -12, 2], (-3, -5), None, None, None),
    ("I6-at-2", [1, -1, 0, -11, 5], (-2, -3), None, None, None),
]


def load_fixture(entry):
    label, coeffs, P, Q, u, v = entry
    return label, EllipticCurveQ(coeffs), _pt(P), _pt(Q), u, v


@pytest.fixture(scope="session")
def e37():
    return EllipticCurveQ([0, 0, 1, -1, 0])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
