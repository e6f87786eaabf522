"""Exact non-Archimedean side over Q: reduction data, intersections, Phi.

Points are pairs of Fractions, or None for the point at infinity.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

from .arith import LogLinear, factorize, support, valuation, valuation_or_inf
from .coords import CoordinateFunction, default_coordinate

O = None


class UnsupportedReduction(ValueError):
    def __init__(self, kodaira, prime):
        super().__init__("unsupported reduction type %s at p=%d (only good and I_n are supported)"
                         % (kodaira, prime))
        self.kodaira = kodaira
        self.prime = prime


class NonMinimalModel(ValueError):
    pass


class NotOnCurve(ValueError):
    pass


def _frac_point(P):
    if P is None:
        return None
    x, y = P
    return Fraction(x), Fraction(y)


@dataclass(frozen=True)
class ReductionData:
    prime: int
    kodaira: str
    n_components: int
    split: bool
    intersection_matrix: tuple

    @property
    def is_good(self):
        return self.kodaira == "I0"

    @property
    def n(self):
        """n for a fiber of type I_n (0 for good reduction)."""
        return 0 if self.is_good else self.n_components


def cycle_intersection_matrix(n):
    """Intersection matrix of an I_n fiber (cycle of n rational curves)."""
    if n == 1:
        return ((0,),)
    M = [[0] * n for _ in range(n)]
    for i in range(n):
        M[i][i] = -2
        M[i][(i + 1) % n] += 1
        M[i][(i - 1) % n] += 1
    return tuple(map(tuple, M))


class EllipticCurveQ:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 with integer coefficients."""

    def __init__(self, a1, a2=None, a3=None, a4=None, a6=None, check_minimal=True):
        if a2 is None:
            a1, a2, a3, a4, a6 = a1
        coeffs = [Fraction(c) for c in (a1, a2, a3, a4, a6)]
        if any(c.denominator != 1 for c in coeffs):
            raise ValueError("Weierstrass coefficients must be integers")
        self.a1, self.a2, self.a3, self.a4, self.a6 = (int(c) for c in coeffs)
        if self.discriminant == 0:
            raise ValueError("singular curve: discriminant is zero")
        self._reduction = {}
        if check_minimal:
            for p in self.bad_primes:
                self._tate(p)

    @property
    def coeffs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def __repr__(self):
        return "EllipticCurveQ(%s)" % list(self.coeffs)

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
        a1, a2, a3, a4, a6 = self.coeffs
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
    def bad_primes(self):
        return [pp.prime for pp in factorize(self.discriminant)]

    # -- group law -----------------------------------------------------------

    def contains(self, P):
        if P is None:
            return True
        x, y = _frac_point(P)
        a1, a2, a3, a4, a6 = self.coeffs
        return y * y + a1 * x * y + a3 * y == x ** 3 + a2 * x * x + a4 * x + a6

    def check(self, P):
        if not self.contains(P):
            raise NotOnCurve("point %s is not on %s" % (P, self))
        return _frac_point(P)

    def neg(self, P):
        if P is None:
            return None
        x, y = _frac_point(P)
        return (x, -y - self.a1 * x - self.a3)

    def add(self, P, Q):
        if P is None:
            return _frac_point(Q)
        if Q is None:
            return _frac_point(P)
        a1, a2, a3, a4, a6 = self.coeffs
        x1, y1 = _frac_point(P)
        x2, y2 = _frac_point(Q)
        if x1 == x2:
            if y1 + y2 + a1 * x2 + a3 == 0:
                return None
            lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / (2 * y1 + a1 * x1 + a3)
        else:
            lam = (y2 - y1) / (x2 - x1)
        nu = y1 - lam * x1
        x3 = lam * lam + a1 * lam - a2 - x1 - x2
        y3 = -(lam + a1) * x3 - nu - a3
        return (x3, y3)

    def sub(self, P, Q):
        return self.add(P, self.neg(Q))

    def mul(self, n, P):
        if n < 0:
            return self.mul(-n, self.neg(P))
        R, A = None, _frac_point(P)
        while n:
            if n & 1:
                R = self.add(R, A)
            A = self.add(A, A)
            n >>= 1
        return R

    def torsion_order(self, P, bound=12):
        """Order of P if it is at most ``bound`` (Mazur), else None."""
        R = _frac_point(P)
        for k in range(1, bound + 1):
            if R is None:
                return k
            R = self.add(R, P)
        return None

    def psi2(self, P):
        x, y = _frac_point(P)
        return 2 * y + self.a1 * x + self.a3

    # -- reduction -----------------------------------------------------------

    def _tate(self, p):
        if p not in self._reduction:
            self._reduction[p] = _tate_algorithm(self, p)
        rd = self._reduction[p]
        if isinstance(rd, Exception):
            raise rd
        return rd

    def reduction(self, p):
        return tate_reduce(self, p)


def _v(n, p):
    return valuation_or_inf(Fraction(n), p)


def _inv_mod(a, p):
    return pow(a % p, -1, p)


def _transform(a, r, s, t):
    """a-invariants after x = x' + r, y = y' + s x' + t."""
    a1, a2, a3, a4, a6 = a
    return (a1 + 2 * s,
            a2 - s * a1 + 3 * r - s * s,
            a3 + r * a1 + 2 * t,
            a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
            a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1)


def _roots_mod(coeffs, p):
    """Number of roots mod p of a polynomial (coefficients highest first)."""
    count = 0
    for r in range(p):
        val = 0
        for c in coeffs:
            val = (val * r + c) % p
        count += val == 0
    return count


def _quadratic_splits(b, c, p):
    """Whether T^2 + bT + c splits over F_p."""
    if p == 2:
        return _roots_mod([1, b, c], 2) > 0
    disc = (b * b - 4 * c) % p
    return disc == 0 or pow(disc, (p - 1) // 2, p) == 1


def _tate_algorithm(E, p):
    """Kodaira type at p; returns ReductionData or an exception instance.

    Follows the usual step-by-step algorithm; additive types are named but
    not supported downstream.
    """
    a = E.coeffs
    disc = E.discriminant
    vD = _v(disc, p)
    if vD == 0:
        return ReductionData(p, "I0", 1, True, ((0,),))
    b2 = a[0] ** 2 + 4 * a[1]
    b4 = 2 * a[3] + a[0] * a[2]
    b6 = a[2] ** 2 + 4 * a[4]
    b8 = E.b8
    c4, c6 = E.c4, E.c6
    # move the singular point to (0, 0)
    if p == 2:
        if b2 % 2 == 0:
            r = a[3] % 2
            t = (r * (1 + a[1] + a[3]) + a[4]) % 2
        else:
            r = a[2] % 2
            t = (r + a[3]) % 2
    elif p == 3:
        r = (-b6) % 3 if b2 % 3 == 0 else (-b2 * b4) % 3
        t = (a[0] * r + a[2]) % 3
    else:
        if c4 % p == 0:
            r = (-_inv_mod(12, p) * b2) % p
        else:
            r = (-_inv_mod(12 * c4, p) * (c6 + b2 * c4)) % p
        t = (-_inv_mod(2, p) * (a[0] * r + a[2])) % p
    a = _transform(a, r, 0, t)
    a1, a2, a3, a4, a6 = a
    if c4 % p != 0:
        split = _quadratic_splits(a1, -a2, p)
        return ReductionData(p, "I%d" % vD, vD, split, cycle_intersection_matrix(vD))
    if _v(a6, p) < 2:
        return UnsupportedReduction("II", p)
    b8 = a1 ** 2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 ** 2 - a4 ** 2
    if _v(b8, p) < 3:
        return UnsupportedReduction("III", p)
    b6 = a3 ** 2 + 4 * a6
    if _v(b6, p) < 3:
        return UnsupportedReduction("IV", p)
    # change coordinates so that p | a1, a2; p^2 | a3, a4; p^3 | a6
    if p == 2:
        s = a2 % 2
        t = 2 * ((a6 // 4) % 2)
    else:
        # h = 1/2 mod p, kept unreduced so that a3 + 2t = -p a3
        h = (p + 1) // 2
        s = -a1 * h
        t = -a3 * h
    a = _transform(a, 0, s, t)
    a1, a2, a3, a4, a6 = a
    b, c, d = a2 // p, a4 // p ** 2, a6 // p ** 3
    w = 27 * d * d - b * b * c * c + 4 * b ** 3 * d - 18 * b * c * d + 4 * c ** 3
    x = 3 * c - b * b
    if _v(w, p) == 0:
        return UnsupportedReduction("I0*", p)
    if _v(x, p) == 0:
        return UnsupportedReduction("I%d*" % (vD - 6), p)
    # triple root: move it to zero
    # the cubic is (T - r)^3 mod p
    if p == 2:
        r = b
    elif p == 3:
        r = -d
    else:
        r = -b * _inv_mod(3, p)
    r = p * (r % p)
    a = _transform(a, r, 0, 0)
    a1, a2, a3, a4, a6 = a
    x3, x6 = a3 // p ** 2, a6 // p ** 4
    if (x3 * x3 + 4 * x6) % p != 0:
        return UnsupportedReduction("IV*", p)
    if p == 2:
        t = x6
    else:
        t = x3 * _inv_mod(2, p)
    t = -p * p * (t % p)
    a = _transform(a, 0, 0, t)
    a1, a2, a3, a4, a6 = a
    if _v(a4, p) < 4:
        return UnsupportedReduction("III*", p)
    if _v(a6, p) < 6:
        return UnsupportedReduction("II*", p)
    return NonMinimalModel("model is not minimal at p=%d" % p)


def tate_reduce(E, p):
    """ReductionData at p; raises UnsupportedReduction for additive fibers."""
    return E._tate(p)


# ---------------------------------------------------------------------------
# where sections meet the special fiber


def reduces_to_node(E, P, p):
    """Whether P is p-integral and reduces to the singular point mod p."""
    if P is None:
        return False
    x, y = E.check(P)
    if x != 0 and valuation(x, p) < 0:
        return False
    a1, a2, a3, a4, a6 = E.coeffs
    phi = 3 * x * x + 2 * a2 * x + a4 - a1 * y
    return valuation_or_inf(E.psi2(P), p) > 0 and valuation_or_inf(phi, p) > 0


def component_index(E, P, p):
    """Component of the special fiber met by the closure of P, up to orientation.

    For I_n the components form a cycle; the index returned is the distance
    M = min(v(2y + a1 x + a3), n/2) from the identity component, so it lies
    in [0, n/2].  The other orientation would give n - M.
    """
    rd = tate_reduce(E, p)
    if rd.is_good or not reduces_to_node(E, P, p):
        return 0
    M = min(valuation_or_inf(E.psi2(P), p), Fraction(rd.n, 2))
    return int(M)


def section_intersection(E, P, Q, p):
    """Intersection number of the closures of P and Q at p.

    Uses translation invariance: the closures of P and Q meet exactly where
    P - Q meets the zero section, i.e. max(0, -v_p(x(P - Q))/2).
    """
    if P == Q or (P is not None and Q is not None and tuple(map(Fraction, P)) == tuple(map(Fraction, Q))):
        raise ValueError("section_intersection needs P != Q")
    tate_reduce(E, p)
    D = E.sub(P, Q)
    if D is None:
        raise ValueError("section_intersection needs P != Q")
    vx = valuation(D[0], p) if D[0] != 0 else 0
    return Fraction(max(0, -vx), 2)


def section_intersection_by_coordinates(E, P, Q, p):
    """Same quantity read off from a shared local coordinate at the common reduction.

    Only for P, Q reducing to the same smooth point of the identity component.
    """
    tate_reduce(E, p)
    if P is None or Q is None:
        R = P if Q is None else Q
        if R is None:
            raise ValueError("section_intersection needs P != Q")
        x, y = E.check(R)
        if x == 0 or valuation(x, p) >= 0:
            return Fraction(0)
        return Fraction(valuation(x / y, p))
    x1, y1 = E.check(P)
    x2, y2 = E.check(Q)
    if valuation_or_inf(x1, p) < 0 and valuation_or_inf(x2, p) < 0:
        return Fraction(valuation_or_inf(x1 / y1 - x2 / y2, p))
    if min(valuation_or_inf(x1, p), valuation_or_inf(x2, p), valuation_or_inf(y1, p),
           valuation_or_inf(y2, p)) < 0:
        return Fraction(0)
    dx = valuation_or_inf(x1 - x2, p)
    dy = valuation_or_inf(y1 - y2, p)
    if dx == 0 or dy == 0:
        return Fraction(0)
    if valuation_or_inf(E.psi2(P), p) == 0:
        return Fraction(dx)
    return Fraction(dy)


# ---------------------------------------------------------------------------
# the vertical correction Phi


@dataclass(frozen=True)
class VerticalQDivisor:
    prime: int
    coefficients: tuple


def _solve_exact(M, rhs):
    """Gaussian elimination over Q for a consistent singular system, gauge x_0 = 0."""
    n = len(rhs)
    if n == 1:
        if rhs[0] != 0:
            raise ValueError("inconsistent system")
        return [Fraction(0)]
    # drop unknown 0 and the last equation (dependent on the rest)
    A = [[Fraction(M[i][j]) for j in range(1, n)] + [Fraction(rhs[i])] for i in range(n - 1)]
    m = n - 1
    for col in range(m):
        piv = next(r for r in range(col, m) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    sol = [Fraction(0)] + [A[i][m] / A[i][i] for i in range(m)]
    for i in range(n):
        if sum(Fraction(M[i][j]) * sol[j] for j in range(n)) != rhs[i]:
            raise ValueError("inconsistent system")
    return sol


def phi_solver(rd, iP, iQ):
    """Phi with (Pbar - Qbar + Phi) . F_i = 0 for every component F_i, Phi_0 = 0."""
    n = rd.n_components
    rhs = [Fraction(0)] * n
    rhs[iP] -= 1
    rhs[iQ] += 1
    if iP == iQ:
        return VerticalQDivisor(rd.prime, tuple([Fraction(0)] * n))
    return VerticalQDivisor(rd.prime, tuple(_solve_exact(rd.intersection_matrix, rhs)))


def phi_pairing(E, P, Q, p):
    """Exact iota_p(Pbar - Qbar, Phi) = Phi_{i(P)} - Phi_{i(Q)}."""
    rd = tate_reduce(E, p)
    if rd.is_good:
        return Fraction(0)
    # the component map is a homomorphism, so translate Q to the identity
    # component; this also removes the orientation ambiguity of the cycle
    iP, iQ = component_index(E, E.sub(P, Q), p), 0
    phi = phi_solver(rd, iP, iQ)
    return phi.coefficients[iP] - phi.coefficients[iQ]


# ---------------------------------------------------------------------------
# the cotangent vector and the assembled local pairing


def _as_coordinate(E, u, P):
    if u is None:
        return default_coordinate(E.coeffs, P)
    return u if isinstance(u, CoordinateFunction) else CoordinateFunction(u)


_SCALE_CACHE = {}


def coordinate_scale(E, u, P):
    """du/omega at P, exact."""
    u = _as_coordinate(E, u, P)
    key = (E.coeffs, str(u.expr), P if P is None else tuple(map(Fraction, P)))
    if key not in _SCALE_CACHE:
        _SCALE_CACHE[key] = u.scale_at(E.coeffs, key[2])
    return _SCALE_CACHE[key]


def val_chi(E, P, Q, u, v, p):
    """v_p(du/omega at P) + v_p(dv/omega at Q)."""
    sP = coordinate_scale(E, u, P)
    sQ = coordinate_scale(E, v, Q)
    if sP == 0 or sQ == 0:
        raise ValueError("coordinate differential vanishes")
    return valuation(sP, p) + valuation(sQ, p)


@dataclass
class LocalPairing:
    prime: int
    val_chi: int
    iota: Fraction
    phi: Fraction

    @property
    def rational(self):
        return self.val_chi + 2 * self.iota - self.phi

    @property
    def value(self):
        return float(self.rational) * math.log(self.prime)

    def as_loglinear(self):
        return LogLinear.single(self.prime, self.rational)


def nonarch_regularized_pairing(E, P, Q, u, v, p):
    """(val_chi + 2 iota_p(Pbar, Qbar) - iota_p(Pbar - Qbar, Phi)) log p."""
    return LocalPairing(p, val_chi(E, P, Q, u, v, p), section_intersection(E, P, Q, p),
                        phi_pairing(E, P, Q, p))


def relevant_primes(E, P, Q, u, v):
    """A finite set of primes outside which every local term vanishes."""
    primes = set(E.bad_primes)
    for R in (P, Q):
        if R is not None:
            for c in R:
                c = Fraction(c)
                if c != 0:
                    primes.update(support(c))
    D = E.sub(P, Q)
    if D is not None and D[0] != 0:
        primes.update(support(D[0]))
    for s in (coordinate_scale(E, u, P), coordinate_scale(E, v, Q)):
        primes.update(support(s))
    return sorted(primes)


def oriented_components(E, points, p):
    """Component indices in Z/n for several points with one common orientation.

    component_index only knows the distance M from the identity component.
    The sign is fixed relative to a reference point using the distances of
    differences, which the homomorphism property determines.
    """
    rd = tate_reduce(E, p)
    n = rd.n
    dist = [component_index(E, X, p) for X in points]
    if n <= 2:
        return dist
    ref = next((i for i, m in enumerate(dist) if 2 * m % n != 0), None)
    if ref is None:
        return dist
    out = []
    for X, m in zip(points, dist):
        if 2 * m % n == 0:
            out.append(m)
            continue
        d = component_index(E, E.sub(X, points[ref]), p)
        plus = (m - dist[ref]) % n
        out.append(m if min(plus, n - plus) == d else (n - m) % n)
    return out


def horizontal_pairing(E, D, Ediv, p):
    """Exact iota_p(Dbar + Phi_D, Ebar) for divisors of rational points.

    D and Ediv are lists of (point, multiplicity) with disjoint supports;
    Phi_D makes Dbar + Phi_D orthogonal to every fiber component.
    """
    rd = tate_reduce(E, p)
    total = Fraction(0)
    for X, m in D:
        for Y, k in Ediv:
            total += m * k * section_intersection(E, X, Y, p)
    if rd.is_good or rd.n == 1:
        return total
    pts = [X for X, _ in D] + [Y for Y, _ in Ediv]
    comps = oriented_components(E, pts, p)
    cD, cE = comps[:len(D)], comps[len(D):]
    n = rd.n
    rhs = [Fraction(0)] * n
    for (X, m), c in zip(D, cD):
        rhs[c] -= m
    phi = _solve_exact(rd.intersection_matrix, rhs)
    for (Y, k), c in zip(Ediv, cE):
        total += k * phi[c]
    return total
