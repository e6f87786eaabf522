"""Numerical Riemann-surface engine for genus 0 and genus 1.

Genus-1 curves are handled through their uniformization: a point of
C/Lambda is sent to (x, y) with x = wp(z) - b2/12 and
2y + a1 x + a3 = wp'(z), so the invariant differential dx/(2y + a1 x + a3)
is dz.  Integration paths are polygonal chains in the z-plane, which fixes
the branch of y along every segment automatically.
"""

from dataclasses import dataclass, field
from functools import cached_property
import cmath
import itertools
import math

import numpy as np

from .quadrature import gauss_kronrod, gauss_legendre_panels

PI = math.pi
TWO_PI_I = 2j * math.pi

DEFAULT_QUAD_EPS = 1e-12
DEFAULT_IM_TOL = 1e-9
DEFAULT_EXTRAP_TOL = 1e-9


class SingularCurveError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class OverlappingSupportError(ValueError):
    pass


# ---------------------------------------------------------------------------
# lattice functions


def _agm(a, b):
    for _ in range(200):
        a1 = 0.5 * (a + b)
        b1 = cmath.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if abs(a - b) <= 1e-16 * abs(a):
            break
    return a


def reduce_basis(w1, w2):
    """Gauss-reduce a lattice basis so that tau = w2/w1 is in the fundamental domain."""
    w1, w2 = complex(w1), complex(w2)
    if (w2 / w1).imag < 0:
        w2 = -w2
    for _ in range(200):
        n = round((w2 / w1).real)
        w2 -= n * w1
        if abs(w2) < abs(w1) * (1 - 1e-15):
            w1, w2 = w2, -w1
        else:
            break
    return w1, w2


def _eisenstein(tau, terms=80):
    q = cmath.exp(TWO_PI_I * tau)
    n = np.arange(1, terms + 1)
    qn = q ** n
    frac = qn / (1 - qn)
    E2 = 1 - 24 * np.sum(n * frac)
    E4 = 1 + 240 * np.sum(n ** 3 * frac)
    E6 = 1 - 504 * np.sum(n ** 5 * frac)
    return complex(E2), complex(E4), complex(E6)


def lattice_invariants(w1, w2):
    """(g2, g3) of the lattice Z w1 + Z w2."""
    w1, w2 = reduce_basis(w1, w2)
    _, E4, E6 = _eisenstein(w2 / w1)
    return (4 * PI ** 4 / 3) * E4 / w1 ** 4, (8 * PI ** 6 / 27) * E6 / w1 ** 6


@dataclass(frozen=True)
class PeriodLattice:
    omega1: complex
    omega2: complex

    def __post_init__(self):
        if (self.omega2 / self.omega1).imag <= 0:
            raise ValueError("period lattice must satisfy Im(omega2/omega1) > 0")

    @property
    def tau(self):
        return self.omega2 / self.omega1

    @cached_property
    def _reduced(self):
        w1, w2 = reduce_basis(self.omega1, self.omega2)
        tau = w2 / w1
        q = cmath.exp(TWO_PI_I * tau)
        # enough terms for |q|^(K/2) < 1e-20
        K = max(4, int(math.ceil(20 * math.log(10) / (PI * tau.imag))) + 2)
        k = np.arange(1, K + 1)
        qk = q ** k
        A = qk / (1 - qk)
        E2 = complex(1 - 24 * np.sum(k * A))
        eta1 = (PI ** 2 / 3) * E2 / w1
        eta2 = (eta1 * w2 - TWO_PI_I) / w1
        return dict(w1=w1, w2=w2, tau=tau, q=q, k=k, qk=qk, A=A, E2=E2, eta1=eta1, eta2=eta2)

    def quasi_periods(self):
        """Quasi-periods (eta(omega1), eta(omega2)) of the Weierstrass zeta function."""
        r = self._reduced
        # express omega_i in the reduced basis
        m = self.to_real_coords(np.array([self.omega1, self.omega2]), reduced=True)
        m = np.rint(m).astype(int)
        return tuple(complex(mi[0] * r["eta1"] + mi[1] * r["eta2"]) for mi in m)

    def to_real_coords(self, z, reduced=False):
        """Real coordinates (alpha, beta) with z = alpha w1 + beta w2."""
        if reduced:
            w1, w2 = self._reduced["w1"], self._reduced["w2"]
        else:
            w1, w2 = self.omega1, self.omega2
        z = np.asarray(z, dtype=complex)
        M = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
        sol = np.linalg.solve(M, np.vstack([z.real.ravel(), z.imag.ravel()]))
        return sol.T.reshape(z.shape + (2,))

    def _split(self, z):
        r = self._reduced
        u = np.asarray(z, dtype=complex) / r["w1"]
        n = np.rint(u.imag / r["tau"].imag)
        u = u - n * r["tau"]
        m = np.rint(u.real)
        u = u - m
        return u, m, n

    def _series(self, u):
        r = self._reduced
        E = np.exp(TWO_PI_I * u)[..., None]
        kk = r["k"]
        Ek = E ** kk
        Emk = 1.0 / Ek
        return r, kk, Ek, Emk

    def wp(self, z):
        u, _, _ = self._split(z)
        r, kk, Ek, Emk = self._series(u)
        s = np.sin(PI * u)
        cos_terms = 0.5 * (Ek + Emk)
        val = PI ** 2 * (1 / s ** 2 - r["E2"] / 3 - 8 * np.sum(kk * r["A"] * cos_terms, axis=-1))
        return val / r["w1"] ** 2

    def wp_prime(self, z):
        u, _, _ = self._split(z)
        r, kk, Ek, Emk = self._series(u)
        s = np.sin(PI * u)
        c = np.cos(PI * u)
        sin_terms = (Ek - Emk) / 2j
        val = -2 * PI ** 3 * c / s ** 3 + 16 * PI ** 3 * np.sum(kk ** 2 * r["A"] * sin_terms, axis=-1)
        return val / r["w1"] ** 3

    def zeta(self, z):
        u, m, n = self._split(z)
        r, kk, Ek, Emk = self._series(u)
        s = np.sin(PI * u)
        c = np.cos(PI * u)
        sin_terms = (Ek - Emk) / 2j
        val = (PI ** 2 / 3) * r["E2"] * u + PI * c / s + 4 * PI * np.sum(r["A"] * sin_terms, axis=-1)
        return val / r["w1"] + m * r["eta1"] + n * r["eta2"]

    def log_abs_sigma(self, z):
        """log|sigma(z)| for the Weierstrass sigma function of the lattice."""
        z = np.asarray(z, dtype=complex)
        u, m, n = self._split(z)
        r = self._reduced
        E = np.exp(TWO_PI_I * u)[..., None]
        w1 = r["w1"]
        prod = (np.sum(np.log(np.abs(1 - r["qk"] * E)) + np.log(np.abs(1 - r["qk"] / E)), axis=-1)
                - 2 * np.sum(np.log(np.abs(1 - r["qk"]))))
        base = (np.log(np.abs(w1)) + np.log(np.abs(np.sin(PI * u) / PI))
                + ((PI ** 2 / 6) * r["E2"] * u ** 2).real + prod)
        lam = m * w1 + n * r["w2"]
        eta_lam = m * r["eta1"] + n * r["eta2"]
        z0 = u * w1
        return base + (eta_lam * (z0 + lam / 2)).real

    def eta_linear(self, z):
        """R-linear extension of the quasi-period map, evaluated at z."""
        r = self._reduced
        ab = self.to_real_coords(z, reduced=True)
        return ab[..., 0] * r["eta1"] + ab[..., 1] * r["eta2"]

    def nearest_translate(self, z, target):
        """The lattice translate of z closest to target."""
        u, _, _ = self._split(np.asarray(z, dtype=complex) - target)
        base = u * self._reduced["w1"] + target
        best = base
        w1, w2 = self._reduced["w1"], self._reduced["w2"]
        for i, j in itertools.product((-1, 0, 1), repeat=2):
            cand = base + i * w1 + j * w2
            if abs(cand - target) < abs(best - target):
                best = cand
        return complex(best)

    def distance_to_lattice(self, z):
        z = complex(z)
        return abs(self.nearest_translate(z, 0) - 0) if z != 0 else 0.0

    def to_json(self):
        return {"omega1": [self.omega1.real, self.omega1.imag],
                "omega2": [self.omega2.real, self.omega2.imag]}


# ---------------------------------------------------------------------------
# curves and points


@dataclass(frozen=True)
class CurvePoint:
    x: complex = None
    y: complex = None

    @property
    def is_infinity(self):
        return self.x is None

    def __repr__(self):
        return "CurvePoint(infinity)" if self.is_infinity else "CurvePoint(%r, %r)" % (self.x, self.y)


INFINITY = CurvePoint()


@dataclass(frozen=True)
class WeierstrassCurveC:
    a1: complex = 0
    a2: complex = 0
    a3: complex = 0
    a4: complex = 0
    a6: complex = 0

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if abs(self.discriminant) <= 1e-300 or abs(self.discriminant) < 1e-13 * max(1.0, abs(self.c4)) ** 3:
            raise SingularCurveError("singular curve: discriminant is zero")

    @classmethod
    def from_list(cls, coeffs):
        return cls(*[complex(c) for c in coeffs])

    @property
    def b2(self):
        return self.a1 ** 2 + 4 * self.a2

    @property
    def b4(self):
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self):
        return self.a3 ** 2 + 4 * self.a6

    @property
    def b8(self):
        a1, a2, a3, a4, a6 = self.a1, self.a2, self.a3, self.a4, self.a6
        return a1 ** 2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 ** 2 - a4 ** 2

    @property
    def c4(self):
        return self.b2 ** 2 - 24 * self.b4

    @property
    def c6(self):
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 ** 2 * b8 - 8 * b4 ** 3 - 27 * b6 ** 2 + 9 * b2 * b4 * b6

    @property
    def is_real(self):
        return all(abs(c.imag) == 0 for c in (self.a1, self.a2, self.a3, self.a4, self.a6))

    def contains(self, P, tol=1e-12):
        if P.is_infinity:
            return True
        x, y = complex(P.x), complex(P.y)
        lhs = y * y + self.a1 * x * y + self.a3 * y
        rhs = x ** 3 + self.a2 * x * x + self.a4 * x + self.a6
        scale = max(1.0, abs(x) ** 3, abs(y) ** 2)
        return abs(lhs - rhs) <= tol * scale

    def psi2(self, x, y):
        return 2 * y + self.a1 * x + self.a3

    def xy_from_z(self, z):
        """Affine coordinates of the point with elliptic parameter z."""
        L = self.lattice
        X = L.wp(z)
        Y = L.wp_prime(z)
        x = X - self.b2 / 12
        y = (Y - self.a1 * x - self.a3) / 2
        return x, y

    @cached_property
    def lattice(self):
        return period_lattice(self)

    def elliptic_log(self, P):
        """z in C with (x(z), y(z)) = P; 0 for the point at infinity."""
        if P.is_infinity:
            return 0j
        return _elliptic_log(self, complex(P.x), complex(P.y))

    def point_from_z(self, z):
        if self.lattice.distance_to_lattice(z) < 1e-14:
            return INFINITY
        x, y = self.xy_from_z(np.array([z]))
        return CurvePoint(complex(x[0]), complex(y[0]))


def _short_roots(E):
    g2 = E.c4 / 12
    g3 = E.c6 / 216
    roots = np.roots([4, 0, -g2, -g3])
    # polish with Newton on 4X^3 - g2 X - g3
    out = []
    for r in roots:
        r = complex(r)
        for _ in range(3):
            f = 4 * r ** 3 - g2 * r - g3
            d = 12 * r ** 2 - g2
            if d == 0:
                break
            r -= f / d
        out.append(r)
    return out, g2, g3


def period_lattice(E):
    """Period lattice of the invariant differential dx/(2y + a1 x + a3)."""
    e, g2, g3 = _short_roots(E)
    cands = []
    for k in range(3):
        i, j = [m for m in range(3) if m != k]
        a = cmath.sqrt(e[k] - e[i])
        b = cmath.sqrt(e[k] - e[j])
        if abs(a - b) > abs(a + b):
            b = -b
        cands.append(PI / _agm(a, b))
    scale = max(abs(g2) ** 0.5, abs(g3) ** (1 / 3), 1e-300)
    best = None
    for w1, w2 in itertools.combinations(cands, 2):
        if abs((w2 / w1).imag) < 1e-12:
            continue
        G2, G3 = lattice_invariants(w1, w2)
        err = abs(G2 - g2) / scale ** 2 + abs(G3 - g3) / scale ** 3
        if best is None or err < best[0]:
            best = (err, w1, w2)
    if best is None or best[0] > 1e-8:
        raise SingularCurveError("could not determine the period lattice")
    w1, w2 = reduce_basis(best[1], best[2])
    if E.is_real:
        w1, w2 = _real_basis(w1, w2)
    return PeriodLattice(w1, w2)


def _real_basis(w1, w2):
    """For a real curve, make omega1 the least positive real period."""
    best = None
    for m, n in itertools.product(range(-3, 4), repeat=2):
        w = m * w1 + n * w2
        if abs(w) > 0 and abs(w.imag) < 1e-10 * abs(w) and w.real > 0:
            if best is None or w.real < best[0].real:
                best = (complex(w.real, 0.0), m, n)
    if best is None:
        return w1, w2
    r, m, n = best
    # complete to a basis: need m*d - n*c = +-1
    for c, d in itertools.product(range(-3, 4), repeat=2):
        if m * d - n * c in (1, -1):
            w = c * w1 + d * w2
            if (w / r).imag < 0:
                w = -w
            # smallest representative with Im > 0
            w -= math.floor((w / r).real + 0.5) * r
            if abs((w / r).real - 0.5) < 1e-9 or abs((w / r).real + 0.5) < 1e-9:
                w = complex(abs(r.real) / 2, w.imag) if w.real != 0 else w
            return r, w
    return w1, w2


def _elliptic_log(E, x, y):
    L = E.lattice
    X = x + E.b2 / 12
    Y = 2 * y + E.a1 * x + E.a3
    w1, w2 = L.omega1, L.omega2
    scale = max(1.0, abs(X))
    if abs(Y) < 1e-10 * scale ** 1.5:
        for z in (w1 / 2, w2 / 2, (w1 + w2) / 2):
            if abs(L.wp(np.array([z]))[0] - X) < 1e-8 * scale:
                return complex(z)
    # Newton from a grid of starting points
    g = (np.arange(8) + 0.5) / 8
    starts = (g[:, None] * w1 + g[None, :] * w2).ravel()
    best = None
    for z0 in starts:
        z = complex(z0)
        for _ in range(60):
            f = L.wp(np.array([z]))[0] - X
            d = L.wp_prime(np.array([z]))[0]
            if d == 0:
                break
            step = f / d
            z -= step
            if abs(step) < 1e-16 * max(1.0, abs(z)):
                break
        res = abs(L.wp(np.array([z]))[0] - X)
        if best is None or res < best[0]:
            best = (res, z)
        if res < 1e-13 * scale:
            break
    z = best[1]
    if abs(L.wp_prime(np.array([z]))[0] - Y) > abs(L.wp_prime(np.array([-z]))[0] - Y):
        z = -z
    return complex(L.nearest_translate(z, 0.25 * (w1 + w2)))


# ---------------------------------------------------------------------------
# genus 0


@dataclass(frozen=True)
class ProjectiveLine:
    """C = P^1 with affine coordinate z; points are complex numbers."""

    def third_kind(self, p, q):
        p, q = complex(p), complex(q)
        if p == q:
            raise ValueError("p and q must differ")
        return lambda z: 1 / (z - p) - 1 / (z - q)


P1 = ProjectiveLine()


def genus0_regularized_integral(p, q, s_p, s_q):
    """Closed form of the regularized integral on P^1.

    u = s_p (z - p) + ..., v = s_q (z - q) + ...; the limit of
    Re int_{q'}^{p'} (1/(z-p) - 1/(z-q)) dz - log|u(p') v(q')|.
    """
    p, q = complex(p), complex(q)
    if p == q:
        raise ValueError("p and q must differ")
    if s_p == 0 or s_q == 0:
        raise ValueError("coordinate scales must be nonzero")
    return -2 * math.log(abs(p - q)) - math.log(abs(s_p)) - math.log(abs(s_q))


# ---------------------------------------------------------------------------
# differentials and integration


@dataclass(frozen=True)
class Segment:
    """Straight segment z(s) = start + s (end - start), s in [0, 1]."""
    start: complex
    end: complex


@dataclass(frozen=True)
class IntegrationPath:
    segments: tuple

    @classmethod
    def polyline(cls, *points):
        pts = [complex(p) for p in points]
        return cls(tuple(Segment(a, b) for a, b in zip(pts[:-1], pts[1:])))

    @classmethod
    def circle(cls, center, radius, n=8):
        ang = np.linspace(0, 2 * PI, n + 1)
        return cls.polyline(*(center + radius * np.exp(1j * ang)))

    @property
    def start(self):
        return self.segments[0].start

    @property
    def end(self):
        return self.segments[-1].end

    def __add__(self, other):
        return IntegrationPath(self.segments + other.segments)


def integrate(form, path, eps=DEFAULT_QUAD_EPS):
    """Integrate form(z) dz along a polygonal path; returns (value, error).

    ``form`` is a vectorized callable giving the coefficient of dz.
    """
    total, err = 0j, 0.0
    n = max(1, len(path.segments))
    for seg in path.segments:
        a, b = seg.start, seg.end
        d = b - a
        if d == 0:
            continue
        val, e = gauss_kronrod(lambda s: form(a + s * d) * d, 0.0, 1.0, eps=eps / n)
        total += val
        err += e
    return total, err


def circle_integral(form, center, radius, n=256):
    """Trapezoid rule on a circle; exponentially accurate for analytic integrands."""
    th = 2 * PI * np.arange(n) / n
    z = center + radius * np.exp(1j * th)
    return complex(np.mean(form(z) * 1j * (z - center)) * 2 * PI)


@dataclass(frozen=True)
class ThirdKindDifferential:
    """eta = (seed + correction) dz with residue divisor sum_j e_j [z_j].

    The seed is a sum of rational differentials
    (y + y(R) + a1 x + a3)/(x - x(R)) dx/(2y + a1 x + a3), each with residue
    +1 at R and -1 at infinity, evaluated at the argument shifted by
    ``shift`` (a generic translation used when a pole is 2-torsion).
    """
    curve: WeierstrassCurveC
    poles: tuple
    shift: complex
    holomorphic_correction: complex
    periods: tuple
    seed_points: tuple = field(repr=False, default=())

    @property
    def poleP(self):
        return self.poles[0][0]

    @property
    def poleQ(self):
        return self.poles[1][0] if len(self.poles) > 1 else None

    def seed(self, z):
        E = self.curve
        z = np.asarray(z, dtype=complex)
        x, y = E.xy_from_z(z + self.shift)
        out = np.zeros_like(z, dtype=complex)
        for e, xr, yr in self.seed_points:
            out = out + e * (y + yr + E.a1 * x + E.a3) / (x - xr)
        return out

    def __call__(self, z):
        return self.seed(z) + self.holomorphic_correction

    def pole_positions(self):
        return [zp for zp, _ in self.poles]


def _seed_points(E, poles, shift):
    pts = []
    L = E.lattice
    for zp, e in poles:
        zz = zp + shift
        if L.distance_to_lattice(zz) < 1e-12:
            if shift != 0:
                raise NormalizationError("shifted pole landed on the origin")
            continue
        x, y = E.xy_from_z(np.array([zz]))
        pts.append((e, complex(x[0]), complex(y[0])))
    return tuple(pts)


def _needs_shift(E, poles):
    L = E.lattice
    for zp, _ in poles:
        if L.distance_to_lattice(zp) < 1e-12:
            continue
        # 2-torsion: 2 z lies in the lattice
        if L.distance_to_lattice(2 * zp) < 1e-9 * max(1.0, abs(L.omega1)):
            return True
    return False


def _clear_line_offset(coords):
    """A value in [0,1) as far as possible (mod 1) from all given coordinates."""
    cs = sorted(set(round(c % 1.0, 12) for c in coords))
    if not cs:
        return 0.5
    if len(cs) == 1:
        return (cs[0] + 0.5) % 1.0
    gaps = [(cs[(i + 1) % len(cs)] - cs[i]) % 1.0 for i in range(len(cs))]
    i = int(np.argmax(gaps))
    return (cs[i] + gaps[i] / 2) % 1.0


def _cycle_paths(L, pole_zs):
    """Base points and closed paths along omega1 and omega2 avoiding all poles."""
    coords = L.to_real_coords(np.array(pole_zs, dtype=complex)) if pole_zs else np.zeros((0, 2))
    beta0 = _clear_line_offset(coords[:, 1]) if len(coords) else 0.5
    alpha0 = _clear_line_offset(coords[:, 0]) if len(coords) else 0.5
    z1 = beta0 * L.omega2
    z2 = alpha0 * L.omega1
    return (IntegrationPath.polyline(z1, z1 + L.omega1),
            IntegrationPath.polyline(z2, z2 + L.omega2))


def divisor_differential(E, divisor, eps=DEFAULT_QUAD_EPS, im_tol=DEFAULT_IM_TOL):
    """Normalized third-kind differential with residue divisor sum e_j [P_j].

    ``divisor`` is a list of (CurvePoint, multiplicity) of total degree 0.
    """
    if sum(e for _, e in divisor) != 0:
        raise ValueError("residue divisor must have degree zero")
    L = E.lattice
    merged = {}
    for P, e in divisor:
        zp = E.elliptic_log(P)
        key = None
        for k in merged:
            if L.distance_to_lattice(k - zp) < 1e-10:
                key = k
        key = zp if key is None else key
        merged[key] = merged.get(key, 0) + e
    poles = tuple((z, e) for z, e in merged.items() if e != 0)
    shift = 0j
    if _needs_shift(E, poles):
        shift = 0.1234567 * L.omega1 + 0.3141592 * L.omega2
    eta = ThirdKindDifferential(E, poles, shift, 0j, (0j, 0j), _seed_points(E, poles, shift))
    c1, c2 = _cycle_paths(L, [z for z, _ in poles])
    p1, _ = integrate(eta, c1, eps)
    p2, _ = integrate(eta, c2, eps)
    w1, w2 = L.omega1, L.omega2
    A = np.array([[w1.real, -w1.imag], [w2.real, -w2.imag]])
    if np.linalg.cond(A) > 1e12:
        raise NormalizationError("ill-conditioned normalization system")
    cr, ci = np.linalg.solve(A, [-p1.real, -p2.real])
    c = complex(cr, ci)
    periods = (p1 + c * w1, p2 + c * w2)
    scale = max(abs(periods[0]), abs(periods[1]), 1.0)
    if max(abs(periods[0].real), abs(periods[1].real)) > im_tol * scale:
        raise NormalizationError("normalized periods are not purely imaginary")
    return ThirdKindDifferential(E, poles, shift, c, periods, eta.seed_points)


def third_kind_differential(E, p, q, eps=DEFAULT_QUAD_EPS, im_tol=DEFAULT_IM_TOL):
    """Differential with residues +1 at p, -1 at q and purely imaginary periods."""
    if isinstance(E, ProjectiveLine):
        return E.third_kind(p, q)
    if p == q:
        raise ValueError("p and q must differ")
    return divisor_differential(E, [(p, 1), (q, -1)], eps, im_tol)


def residue(form, center, radius, n=256):
    return circle_integral(form, center, radius, n) / TWO_PI_I


# ---------------------------------------------------------------------------
# regularized limit


def richardson(values, ratio=2.0, order=1):
    """Richardson table for values[j] = L + c1 h_j^order + c2 h_j^(order+1) + ...

    with h_j = h_0 / ratio^j.  Returns (estimate, error estimate, table).
    """
    vals = [float(v) for v in values]
    table = [vals]
    best = (vals[-1], abs(vals[-1] - vals[-2]) if len(vals) > 1 else math.inf)
    for m in range(1, len(vals)):
        prev = table[-1]
        f = ratio ** (order + m - 1)
        row = [(f * prev[j + 1] - prev[j]) / (f - 1) for j in range(len(prev) - 1)]
        table.append(row)
        if len(row) >= 2:
            err = abs(row[-1] - row[-2])
            if err < best[1]:
                best = (row[-1], err)
        if len(row) < 2:
            break
    return best[0], best[1], table


@dataclass
class RegularizedResult:
    value: float
    error: float
    offsets: list
    samples: list
    complex_value: complex = None

    def __float__(self):
        return self.value


def _approach_dirs(a, b, angle_p, angle_q):
    d = (a - b) / abs(a - b)
    return -d * cmath.exp(1j * angle_p), d * cmath.exp(1j * angle_q)


def _radial(form, center, direction, r_far, offsets):
    """Cumulative int from center + r_far dir to center + eps_j dir, for each offset."""
    logs = [math.log(r_far)] + [math.log(e) for e in offsets]

    def f(s):
        w = np.exp(s) * direction
        return form(center + w) * w

    pieces = gauss_legendre_panels(f, logs)
    return np.cumsum(pieces)


def regularized_integral(E, p, q, u, v, offsets=None, angle_p=0.0, angle_q=0.0, eta=None,
                         eps=DEFAULT_QUAD_EPS, tol=DEFAULT_EXTRAP_TOL, raise_on_fail=True):
    """lim Re int_{q'}^{p'} eta - log|u(p') v(q')| for p' -> p, q' -> q.

    For genus 1, u and v are vectorized callables of (x, y); for P^1 they are
    callables of the coordinate z.  p', q' approach along rays whose angles
    relative to the straight q->p segment are angle_p, angle_q.
    """
    if offsets is None:
        offsets = [2.0 ** -j for j in range(8, 21)]
    if isinstance(E, ProjectiveLine):
        a, b = complex(p), complex(q)
        form = E.third_kind(a, b)
        clearance = abs(a - b)
        u_at = lambda z: u(z)
        v_at = lambda z: v(z)
    else:
        if eta is None:
            eta = third_kind_differential(E, p, q, eps)
        L = E.lattice
        b = E.elliptic_log(q)
        b = L.nearest_translate(b, 0)
        a = L.nearest_translate(E.elliptic_log(p), b)
        form = eta
        others = []
        for zp in eta.pole_positions():
            for i, j in itertools.product((-1, 0, 1), repeat=2):
                for ctr in (a, b):
                    t = L.nearest_translate(zp, ctr) + i * L.omega1 + j * L.omega2
                    if abs(t - a) > 1e-9 and abs(t - b) > 1e-9:
                        others.append(t)
        clearance = min([abs(a - b)] + [min(abs(t - a), abs(t - b)) for t in others])

        def u_at(z):
            x, y = E.xy_from_z(z)
            return u(x, y)

        def v_at(z):
            x, y = E.xy_from_z(z)
            return v(x, y)
    r0 = 0.3 * clearance
    scale = min(1.0, r0 * 2 ** 6)
    offs = [scale * e for e in offsets]
    dP, dQ = _approach_dirs(a, b, angle_p, angle_q)
    mid_path = IntegrationPath.polyline(b + r0 * dQ, a + r0 * dP)
    I_mid, err_mid = integrate(form, mid_path, eps)
    I_P = _radial(form, a, dP, r0, offs)
    I_Q = -_radial(form, b, dQ, r0, offs)
    zP = np.array([a + e * dP for e in offs])
    zQ = np.array([b + e * dQ for e in offs])
    logu = np.log(np.asarray(u_at(zP), dtype=complex))
    logv = np.log(np.asarray(v_at(zQ), dtype=complex))
    totals = I_mid + I_P + I_Q
    samples = (totals - logu - logv)
    value, err, _ = richardson(samples.real, 2.0, 1)
    cval, _, _ = richardson(samples.imag, 2.0, 1)
    err = max(err, err_mid)
    result = RegularizedResult(value, err, offs, list(samples.real), complex(value, cval))
    if err > tol and raise_on_fail:
        raise NonConvergenceError("regularized limit did not converge (error %.2e)" % err, value, err)
    return result


def archimedean_disjoint_pairing(E, D, Ediv, eps=DEFAULT_QUAD_EPS):
    """Re int_{gamma_D} eta_E for degree-0 divisors with disjoint support.

    Divisors are lists of (CurvePoint, multiplicity).  Returns (value, error).
    """
    if sum(m for _, m in D) != 0 or sum(m for _, m in Ediv) != 0:
        raise ValueError("divisors must have degree zero")
    L = E.lattice
    zD = [(E.elliptic_log(P), m) for P, m in D if m != 0]
    zE = [(E.elliptic_log(R), m) for R, m in Ediv if m != 0]
    for z1, _ in zD:
        for z2, _ in zE:
            if L.distance_to_lattice(z1 - z2) < 1e-10:
                raise OverlappingSupportError(
                    "divisors share support; use the regularized pairing instead")
    if not zD:
        return 0.0, 0.0
    eta = divisor_differential(E, Ediv, eps)
    poles = [z for z, _ in zE]
    base = _choose_base(L, poles)
    total, err = 0j, 0.0
    for z, m in zD:
        path = _clear_path(L, base, L.nearest_translate(z, base), poles)
        val, e = integrate(eta, path, eps)
        total += m * val
        err += abs(m) * e
    return float(total.real), err


def _pole_translates(L, poles, center, radius):
    out = []
    for zp in poles:
        t0 = L.nearest_translate(zp, center)
        for i, j in itertools.product(range(-2, 3), repeat=2):
            t = t0 + i * L.omega1 + j * L.omega2
            if abs(t - center) <= radius:
                out.append(t)
    return out


def _seg_distance(a, b, z):
    d = b - a
    s = ((z - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(a + s * d - z)


def _choose_base(L, poles):
    coords = L.to_real_coords(np.array(poles, dtype=complex)) if poles else np.zeros((0, 2))
    al = _clear_line_offset(coords[:, 0]) if len(poles) else 0.5
    be = _clear_line_offset(coords[:, 1]) if len(poles) else 0.5
    return al * L.omega1 + be * L.omega2


def _clear_path(L, a, b, poles):
    """Straight path a -> b, or a two-segment detour if it passes too close to a pole."""
    span = abs(a - b) + abs(L.omega1) + abs(L.omega2)
    nearby = _pole_translates(L, poles, 0.5 * (a + b), span)
    margin = 0.05 * min(abs(L.omega1), abs(L.omega2))

    def clearance(pts):
        return min([_seg_distance(p0, p1, t) for p0, p1 in zip(pts[:-1], pts[1:]) for t in nearby
                    if abs(t - b) > 1e-9 and abs(t - a) > 1e-9] or [math.inf])

    best = [a, b]
    best_c = clearance(best)
    if best_c > margin:
        return IntegrationPath.polyline(*best)
    mid = 0.5 * (a + b)
    for r in (0.15, 0.3, 0.5):
        for th in np.linspace(0, 2 * PI, 16, endpoint=False):
            w = mid + r * abs(L.omega1) * cmath.exp(1j * th)
            c = clearance([a, w, b])
            if c > best_c:
                best, best_c = [a, w, b], c
    return IntegrationPath.polyline(*best)
