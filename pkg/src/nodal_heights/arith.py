"""Exact rational arithmetic helpers: valuations, factorization, log norms.

Rationals are plain ``fractions.Fraction`` values, which are always kept in
lowest terms with a positive denominator.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

BigRational = Fraction

# Deterministic Miller-Rabin witnesses for n < 3.3e24.
_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


class ArithError(ValueError):
    pass


def as_rational(r):
    """Coerce ints, Fractions and "num/den" strings to a Fraction."""
    if isinstance(r, Fraction):
        return r
    if isinstance(r, int):
        return Fraction(r)
    if isinstance(r, str):
        return Fraction(r.strip())
    raise TypeError("cannot interpret %r as a rational" % (r,))


def is_prime(n):
    n = int(n)
    if n < 2:
        return False
    for p in _WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True, order=True)
class PrimePower:
    prime: int
    exponent: int

    def __post_init__(self):
        if not is_prime(self.prime):
            raise ArithError("%d is not prime" % self.prime)

    def value(self):
        return Fraction(self.prime) ** self.exponent


def _pollard_rho(n):
    if n % 2 == 0:
        return 2
    c = 1
    while True:
        x = y = 2
        d = 1
        f = lambda v: (v * v + c) % n
        while d == 1:
            x = f(x)
            y = f(f(y))
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
        c += 1


def _factor_into(n, out):
    if n == 1:
        return
    if is_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    for p in (2, 3, 5, 7, 11, 13):
        if n % p == 0:
            out[p] = out.get(p, 0) + 1
            _factor_into(n // p, out)
            return
    d = _pollard_rho(n)
    _factor_into(d, out)
    _factor_into(n // d, out)


def factorize(n):
    """Prime factorization of |n| as a list of PrimePower, primes increasing."""
    n = int(n)
    if n == 0:
        raise ArithError("cannot factorize zero")
    counts = {}
    _factor_into(abs(n), counts)
    return [PrimePower(p, e) for p, e in sorted(counts.items())]


def prime_divisors(n):
    return [pp.prime for pp in factorize(n)]


def valuation(r, p):
    """Exponent of the prime p in the nonzero rational r."""
    r = as_rational(r)
    if r == 0:
        raise ArithError("valuation of zero")
    if not is_prime(p):
        raise ArithError("%d is not prime" % p)
    v = 0
    num, den = r.numerator, r.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def valuation_or_inf(r, p):
    """Like valuation but returns math.inf for zero."""
    r = as_rational(r)
    if r == 0:
        return math.inf
    return valuation(r, p)


def log_norm(p):
    """log Nm(p) = log p over the rationals."""
    if not is_prime(p):
        raise ArithError("%d is not prime" % p)
    return math.log(p)


def support(r):
    """Primes at which the nonzero rational r has nonzero valuation."""
    r = as_rational(r)
    if r == 0:
        raise ArithError("valuation of zero")
    primes = set(prime_divisors(r.numerator)) | set(prime_divisors(r.denominator))
    return sorted(primes)


def format_rational(r):
    r = as_rational(r)
    return "%d/%d" % (r.numerator, r.denominator)


def parse_rational(s):
    return as_rational(s)


class LogLinear:
    """An exact combination sum_p c_p log p with rational c_p.

    Floats only appear in ``value``, which sums in increasing prime order so
    that equal coefficient tables always give bit-identical floats.
    """

    def __init__(self, coeffs=None):
        self.coeffs = {}
        for p, c in (coeffs or {}).items():
            c = as_rational(c)
            if c != 0:
                self.coeffs[int(p)] = c

    @classmethod
    def single(cls, p, c):
        return cls({p: c})

    def __add__(self, other):
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0) + c
        return LogLinear(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, k):
        return LogLinear({p: c * k for p, c in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, LogLinear) and self.coeffs == other.coeffs

    def coefficient(self, p):
        return self.coeffs.get(p, Fraction(0))

    def primes(self):
        return sorted(self.coeffs)

    def value(self):
        return math.fsum(float(self.coeffs[p]) * math.log(p) for p in sorted(self.coeffs))

    def __repr__(self):
        terms = " + ".join("(%s)log %d" % (self.coeffs[p], p) for p in self.primes())
        return "LogLinear(%s)" % (terms or "0")


def log_abs_as_loglinear(r):
    """log|r| written as sum_p v_p(r) log p."""
    r = as_rational(r)
    return LogLinear({p: valuation(r, p) for p in support(r)})
