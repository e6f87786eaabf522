"""Coordinate functions u(x, y) and their exact first-order data at points.

A coordinate function is a rational expression in x and y with rational
coefficients.  Its scale at a point P is the rational number du/omega at P,
where omega = dx/(2y + a1 x + a3) is the invariant differential.
"""

from fractions import Fraction
import math

import numpy as np
import sympy as sp

X, Y, T = sp.symbols("x y t")


class CoordinateError(ValueError):
    pass


def _to_fraction(c):
    c = sp.nsimplify(c) if not isinstance(c, sp.Rational) else c
    if not c.is_Rational:
        raise CoordinateError("expected a rational number, got %s" % c)
    return Fraction(int(c.p), int(c.q))


def parse_function(text):
    """Parse a rational expression in x, y (``^`` is accepted for powers)."""
    if isinstance(text, sp.Expr):
        expr = text
    else:
        try:
            expr = sp.sympify(str(text).replace("^", "**"), locals={"x": X, "y": Y}, rational=True)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise CoordinateError("cannot parse coordinate function %r" % (text,)) from exc
    extra = expr.free_symbols - {X, Y}
    if extra:
        raise CoordinateError("coordinate function may only use x and y, found %s"
                              % ", ".join(sorted(map(str, extra))))
    num, den = sp.fraction(sp.together(expr))
    for part in (num, den):
        poly = sp.Poly(part, X, Y)
        if not all(c.is_Rational for c in poly.coeffs()):
            raise CoordinateError("coefficients must be rational in %s" % expr)
    if den == 0:
        raise CoordinateError("denominator vanishes identically")
    return expr


def _truncate(expr, n):
    """Drop powers t^k with k >= n from a polynomial/Laurent polynomial in t."""
    expr = sp.expand(expr)
    return sp.Add(*[term for term in sp.Add.make_args(expr)
                    if sp.degree(term, T) < n or term.is_constant()])


def local_expansion(coeffs, P, order=8):
    """Exact expansions (x(t), y(t), rho0) in a local parameter t at P.

    rho0 is the value at P of omega/dt.  P is a pair of Fractions or None
    for the point at infinity, where t = -x/y.
    """
    a1, a2, a3, a4, a6 = [sp.Rational(c.numerator, c.denominator) for c in map(Fraction, coeffs)]
    if P is None:
        # w = -1/y satisfies w = t^3 + a1 t w + a2 t^2 w + a3 w^2 + a4 t w^2 + a6 w^3
        w = T ** 3
        for _ in range(order):
            w = _truncate(T ** 3 + a1 * T * w + a2 * T ** 2 * w + a3 * w ** 2
                          + a4 * T * w ** 2 + a6 * w ** 3, order + 3)
        x = T / w
        y = -1 / w
        return x, y, sp.Integer(1)
    x0, y0 = [sp.Rational(c.numerator, c.denominator) for c in map(Fraction, P)]
    F = lambda xx, yy: yy ** 2 + a1 * xx * yy + a3 * yy - xx ** 3 - a2 * xx ** 2 - a4 * xx - a6
    Fx = a1 * y0 - 3 * x0 ** 2 - 2 * a2 * x0 - a4
    Fy = 2 * y0 + a1 * x0 + a3
    if F(x0, y0) != 0:
        raise CoordinateError("point %s is not on the curve" % (P,))
    if Fy != 0:
        # t = x - x0; iterate y = y - F/F_y(P) to gain one order each pass
        yt = y0
        for _ in range(order):
            yt = _truncate(yt - F(x0 + T, yt) / Fy, order)
        return x0 + T, yt, 1 / Fy
    # vertical tangent: t = y - y0, omega = dy / (-F_x)
    xt = x0
    for _ in range(order):
        xt = _truncate(xt - F(xt, y0 + T) / Fx, order)
    return xt, y0 + T, -1 / Fx


class CoordinateFunction:
    """A rational function u(x, y) used as a local coordinate."""

    def __init__(self, expr):
        self.expr = parse_function(expr)
        self._num = sp.lambdify((X, Y), self.expr, modules="numpy")

    def __repr__(self):
        return "CoordinateFunction(%s)" % sp.sstr(self.expr)

    def __str__(self):
        return sp.sstr(self.expr)

    def __call__(self, x, y):
        with np.errstate(all="ignore"):
            out = self._num(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
        return np.broadcast_to(np.asarray(out, dtype=complex), np.broadcast(x, y).shape)

    def scaled(self, lam):
        return CoordinateFunction(sp.Rational(Fraction(lam).numerator, Fraction(lam).denominator) * self.expr)

    def scale_at(self, coeffs, P, order=8):
        """du/omega at P as an exact Fraction; u must vanish simply at P."""
        x, y, rho0 = local_expansion(coeffs, P, order)
        ut = self.expr.subs({X: x, Y: y}, simultaneous=True)
        ser = sp.series(ut, T, 0, 2).removeO()
        ser = sp.expand(ser)
        c0 = ser.coeff(T, 0)
        neg = any(ser.coeff(T, -k) != 0 for k in range(1, 3 * order + 4))
        if c0 != 0 or neg:
            raise CoordinateError("%s does not vanish at %s" % (self, _fmt_point(P)))
        c1 = ser.coeff(T, 1)
        if c1 == 0:
            raise CoordinateError("d(%s) vanishes at %s" % (self, _fmt_point(P)))
        return _to_fraction(c1 / rho0)


def _fmt_point(P):
    return "infinity" if P is None else "(%s, %s)" % P


def default_coordinate(coeffs, P):
    """A simple coordinate vanishing to first order at P."""
    if P is None:
        return CoordinateFunction("x/y")
    a1, a2, a3, a4, a6 = map(Fraction, coeffs)
    x0, y0 = P
    if 2 * y0 + a1 * x0 + a3 != 0:
        return CoordinateFunction(X - sp.Rational(x0.numerator, x0.denominator))
    return CoordinateFunction(Y - sp.Rational(y0.numerator, y0.denominator))


def log_abs(value):
    return math.log(abs(value))
