from fractions import Fraction as F

import pytest
import sympy as sp

from nodal_heights.coords import (CoordinateError, CoordinateFunction, default_coordinate, local_expansion,
                                  parse_function, T, X, Y)

C37 = (0, 0, 1, -1, 0)


@pytest.mark.parametrize("expr,P,expected", [
    ("x", (F(0), F(0)), 1),
    ("x - 1", (F(1), F(0)), 1),
    ("x/y", None, -1),
    ("y", (F(0), F(0)), -1),
    ("3*x", (F(0), F(0)), 3),
    ("x + x^2", (F(0), F(0)), 1),
    ("y - 14", (F(6), F(14)), 107),
])
def test_scale_at(expr, P, expected):
    assert CoordinateFunction(expr).scale_at(C37, P) == expected


def test_scale_matches_implicit_derivative():
    # at an affine point with 2y + a1 x + a3 != 0, omega = dx/(2y+a1x+a3), so d(x - x0)/omega = 2y0 + a3
    P = (F(6), F(14))
    assert CoordinateFunction("x - 6").scale_at(C37, P) == 2 * 14 + 1


def test_local_expansion_lies_on_curve():
    for P in ((F(0), F(0)), (F(1), F(-1))):
        x, y, _ = local_expansion(C37, P, order=6)
        resid = sp.expand(y ** 2 + y - x ** 3 + x)
        assert all(resid.coeff(T, k) == 0 for k in range(6))
    # at infinity w = -1/y must satisfy the w-equation to the requested order
    x, y, rho = local_expansion(C37, None, order=10)
    w = sp.expand(-1 / y)
    assert rho == 1
    # 37a: w = t^3 + a3 w^2 + a4 t w^2
    resid = sp.series(w - (T ** 3 + w ** 2 - T * w ** 2), T, 0, 13).removeO()
    assert sp.expand(resid) == 0


def test_not_vanishing():
    with pytest.raises(CoordinateError):
        CoordinateFunction("x - 1").scale_at(C37, (F(0), F(0)))
    with pytest.raises(CoordinateError):
        CoordinateFunction("x").scale_at(C37, None)


def test_parse_errors():
    with pytest.raises(CoordinateError):
        parse_function("x + z")
    with pytest.raises(CoordinateError):
        parse_function("sqrt(2)*x")
    with pytest.raises(CoordinateError):
        parse_function("x +* y")


def test_parse_accepts_caret_and_rationals():
    assert parse_function("x^2/3 - y") == X ** 2 / 3 - Y


def test_numeric_evaluation():
    u = CoordinateFunction("x/y")
    assert complex(u(2.0, 4.0)) == 0.5
    assert str(u.scaled(F(2, 3))) == "2*x/(3*y)"


def test_default_coordinate():
    assert str(default_coordinate(C37, None)) == "x/y"
    assert str(default_coordinate(C37, (F(6), F(14)))) == "x - 6"
    # vertical tangent: 2y + 1 = 0 never happens on 37a over Q, use y^2 = x^3 - x at (0, 0)
    assert str(default_coordinate((0, 0, 0, -1, 0), (F(0), F(0)))) == "y"
