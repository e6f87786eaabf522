"""Nodal pencils y^2 = q(x) + rate * t and the limit of their period matrices.

q is a monic cubic (x - r)^2 (x - s) with r != s.  The central fiber is a
nodal cubic whose normalization is P^1 via x = s + w^2, y = w (x - r); the
two preimages of the node are w = +sqrt(d) and w = -sqrt(d) with d = r - s.
"""

from dataclasses import dataclass
from fractions import Fraction
import cmath
import math

import numpy as np
import sympy as sp

from .curve_analytic import (NonConvergenceError, WeierstrassCurveC, genus0_regularized_integral,
                             period_lattice, regularized_integral, P1)
from .mhs_heights import BiextensionPeriodMatrix, height_of_lmhs_matrix

TWO_PI_I = 2j * math.pi


class FamilyError(ValueError):
    pass


def _nearest_lattice_vector(w1, w2, target):
    M = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
    a, b = np.linalg.solve(M, [target.real, target.imag])
    best = None
    for i in (math.floor(a), math.ceil(a)):
        for j in (math.floor(b), math.ceil(b)):
            v = i * w1 + j * w2
            if best is None or abs(v - target) < abs(best[0] - target):
                best = (v, i, j)
    return best


@dataclass(frozen=True)
class NodalFamily:
    r: Fraction
    s: Fraction
    rate: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "r", Fraction(self.r))
        object.__setattr__(self, "s", Fraction(self.s))
        object.__setattr__(self, "rate", Fraction(self.rate))
        if self.r == self.s:
            raise FamilyError("central fiber must have exactly one node (r != s)")
        if self.rate == 0:
            raise FamilyError("rate must be nonzero")

    @classmethod
    def from_polynomial(cls, text, rate=1):
        """Parse a monic cubic in x with exactly one double root, e.g. "x^3+x^2"."""
        x = sp.Symbol("x")
        try:
            poly = sp.Poly(sp.sympify(str(text).replace("^", "**"), locals={"x": x}, rational=True), x)
        except (sp.SympifyError, sp.PolynomialError, SyntaxError, TypeError) as exc:
            raise FamilyError("cannot parse cubic %r" % (text,)) from exc
        if poly.degree() != 3 or poly.LC() != 1:
            raise FamilyError("q must be a monic cubic")
        roots = sp.roots(poly)
        if sorted(roots.values()) != [1, 2]:
            raise FamilyError("q must have exactly one double root (a single node)")
        r = next(k for k, m in roots.items() if m == 2)
        s = next(k for k, m in roots.items() if m == 1)
        if not (r.is_Rational and s.is_Rational):
            raise FamilyError("roots of q must be rational")
        return cls(Fraction(int(r.p), int(r.q)), Fraction(int(s.p), int(s.q)), Fraction(rate))

    @property
    def d(self):
        return self.r - self.s

    @property
    def cubic_coeffs(self):
        """(a2, a4, a6) of q(x) = x^3 + a2 x^2 + a4 x + a6."""
        r, s = self.r, self.s
        return (-(2 * r + s), r * r + 2 * r * s, -r * r * s)

    @property
    def t_max(self):
        """Radius of the punctured disc on which the fiber stays smooth."""
        # the other critical value of q sits at x = (r + 2s)/3
        c = (self.r + 2 * self.s) / 3
        a2, a4, a6 = self.cubic_coeffs
        return abs(float(c ** 3 + a2 * c * c + a4 * c + a6) / float(self.rate))

    def fiber(self, t):
        a2, a4, a6 = self.cubic_coeffs
        return WeierstrassCurveC(0, float(a2), 0, float(a4), float(a6) + float(self.rate) * t)

    @property
    def sqrt_d(self):
        return cmath.sqrt(float(self.d))

    def reparametrize(self, lam):
        """The same pencil in the base coordinate t' = lam * t (so chi becomes lam * chi)."""
        return NodalFamily(self.r, self.s, self.rate / Fraction(lam))

    # -- data on the normalization C = P^1 (coordinate w) --------------------

    def node_preimages(self):
        return self.sqrt_d, -self.sqrt_d

    def coordinate_scales(self):
        """Scales of u, v at p, q, where u v = (node-adapted factors) = rate * t.

        On C, the factor y + (x - r) sqrt(x - s) restricts to 2 w (w^2 - d)
        near p, and likewise near q; both have derivative 4d there.  The rate
        is absorbed into u.
        """
        d = self.d
        return 4 * d / self.rate, 4 * d


@dataclass(frozen=True)
class FiberPeriodData:
    t: complex
    vanishing: complex
    alpha: complex
    lattice: tuple

    @property
    def tau(self):
        return self.alpha / self.vanishing


def fiber_periods(family, t, alpha_hint=None):
    """Periods of mu = sqrt(d) dx/y on the fiber over t.

    The vanishing cycle is the lattice vector whose period is closest to
    2 pi i.  The alpha cycle completes a basis with Im(alpha/beta) > 0; with
    no hint it is reduced modulo beta so that |Im| of its period is at most pi.
    """
    t = complex(t)
    if not 0 < abs(t) < family.t_max:
        raise FamilyError("t=%s is outside the disc 0 < |t| < %g" % (t, family.t_max))
    L = period_lattice(family.fiber(t))
    # mu = 2 sqrt(d) * (dx / 2y)
    k = 2 * family.sqrt_d
    w1, w2 = k * L.omega1, k * L.omega2
    beta, i, j = _nearest_lattice_vector(w1, w2, TWO_PI_I)
    if abs(beta - TWO_PI_I) > 0.5:
        raise FamilyError("no vanishing cycle found; t too large")
    g = math.gcd(i, j)
    if g != 1:
        raise FamilyError("vanishing cycle is not primitive")
    # complete (i, j) to a basis
    _, a, b = _ext_gcd(i, j)
    alpha = -b * w1 + a * w2
    if (alpha / beta).imag < 0:
        alpha = -alpha
    if alpha_hint is None:
        alpha -= round((alpha / beta).real) * beta
    else:
        alpha, _, _ = _nearest_lattice_vector(beta, alpha, alpha_hint)
        alpha = alpha_hint + _snap(alpha - alpha_hint, beta)
    return FiberPeriodData(t, beta, alpha, (w1, w2))


def _snap(diff, beta):
    return round((diff / beta).real) * beta if abs(diff) > 0 else 0j


def _ext_gcd(a, b):
    if b == 0:
        return (a, 1 if a >= 0 else -1, 0) if a else (0, 0, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _fit_limit(ts, vals):
    """Least-squares fit of L + a t log t + b t + c t^2 log t; returns L."""
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(vals, dtype=complex)
    A = np.vstack([np.ones_like(ts), ts * np.log(ts), ts, ts * ts * np.log(ts)]).T
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return complex(coef[0])


@dataclass
class LimitEstimate:
    value: complex
    error: float
    samples: list

    @property
    def real(self):
        return self.value.real


def lmhs_corner(family, t_sequence=None, tol=1e-6):
    """I_chi = lim (int_alpha mu - log t), extrapolated along real positive t."""
    if t_sequence is None:
        # half-decades in the normalized variable rate * t
        scale = min(1.0, 1.0 / abs(float(family.rate)))
        t_sequence = [scale * 10.0 ** (-k / 2) for k in range(6, 17)]
    ts = sorted((float(t) for t in t_sequence), reverse=True)
    if len(ts) < 6:
        raise ValueError("need at least 6 values of t")
    ts = [t for t in ts if t < family.t_max]
    if len(ts) < 6:
        raise FamilyError("t_sequence must lie in the validity disc (t < %g)" % family.t_max)
    samples = [fiber_periods(family, t).alpha - math.log(t) for t in ts]
    return corner_from_samples(ts, samples, tol)


def corner_from_samples(ts, samples, tol=1e-6):
    """Extrapolate t -> 0 from samples of int_alpha mu - log t (t decreasing)."""
    full = _fit_limit(ts, samples)
    tail = _fit_limit(ts[1:], samples[1:])
    err = max(abs(full.real - tail.real), 1e-14)
    if err > tol:
        raise NonConvergenceError("LMHS corner extrapolation did not converge (%.2e)" % err, full, err)
    return LimitEstimate(full, err, list(zip(ts, samples)))


def normalization_oracle(family):
    """Closed-form regularized integral on the normalization P^1."""
    p, q = family.node_preimages()
    sp_, sq = family.coordinate_scales()
    return genus0_regularized_integral(p, q, float(sp_), float(sq))


def normalization_regularized_integral(family, **kw):
    """The same quantity by sampling the limit on P^1 numerically."""
    p, q = family.node_preimages()
    d = family.d
    rate = float(family.rate)
    u = lambda w: 2 * w * (w * w - float(d)) / rate
    v = lambda w: 2 * w * (w * w - float(d))
    return regularized_integral(P1, p, q, u, v, **kw)


def lmhs_period_matrix(family, corner=None):
    """The 1 x 2 limit period matrix (I_chi, 2 pi i) of the pencil."""
    if corner is None:
        corner = lmhs_corner(family).value
    return BiextensionPeriodMatrix(P_H=np.zeros((0, 0)), a=np.zeros((1, 0)), b=np.zeros((0, 1)),
                                   c=corner, corner_unit=TWO_PI_I)


def lmhs_height(family):
    return height_of_lmhs_matrix(lmhs_period_matrix(family))


@dataclass
class MonodromyReport:
    matrix: tuple
    pairing: int
    unipotent: bool
    log_square_zero: bool


def monodromy_check(family, t0, steps=256, loops=1):
    """Continue (beta, alpha) around t0 e^{i theta} and read off the integer monodromy.

    Row i of the matrix holds the coordinates of T applied to the i-th basis
    vector of (beta, alpha), so T beta = beta, T alpha = alpha + k beta reads
    [[1, 0], [k, 1]].
    """
    t0 = complex(t0)
    start = fiber_periods(family, t0)
    beta, alpha = start.vanishing, start.alpha
    for n in range(1, steps * loops + 1):
        t = t0 * cmath.exp(2j * math.pi * n / steps)
        L = period_lattice(family.fiber(t))
        k = 2 * family.sqrt_d
        w1, w2 = k * L.omega1, k * L.omega2
        beta_new, _, _ = _nearest_lattice_vector(w1, w2, beta)
        alpha_new, _, _ = _nearest_lattice_vector(w1, w2, alpha)
        if abs(beta_new - beta) > 0.25 * abs(beta) or abs(alpha_new - alpha) > 0.25 * abs(beta):
            raise NonConvergenceError("period continuation jumped; use more steps")
        beta, alpha = beta_new, alpha_new
    # express the continued cycles in the starting basis
    M = np.array([[start.vanishing.real, start.alpha.real], [start.vanishing.imag, start.alpha.imag]])
    cb = np.linalg.solve(M, [beta.real, beta.imag])
    ca = np.linalg.solve(M, [alpha.real, alpha.imag])
    if max(abs(cb - np.rint(cb)).max(), abs(ca - np.rint(ca)).max()) > 1e-6:
        raise NonConvergenceError("continued periods are not integral in the starting basis")
    cb, ca = np.rint(cb).astype(int), np.rint(ca).astype(int)
    T = ((int(cb[0]), int(cb[1])), (int(ca[0]), int(ca[1])))
    Tm = np.array(T)
    N = Tm - np.eye(2, dtype=int)
    return MonodromyReport(T, int(ca[0]),
                           bool(round(np.linalg.det(Tm)) == 1 and np.all(np.linalg.eigvals(Tm).round(9) == 1)),
                           bool(np.all(N @ N == 0)))
