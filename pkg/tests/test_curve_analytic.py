import cmath
import math

import mpmath
import numpy as np
import pytest

from nodal_heights.curve_analytic import (INFINITY, P1, CurvePoint, IntegrationPath, NonConvergenceError,
                                          OverlappingSupportError, SingularCurveError, WeierstrassCurveC,
                                          archimedean_disjoint_pairing, circle_integral, divisor_differential,
                                          genus0_regularized_integral, integrate, lattice_invariants,
                                          regularized_integral, residue, richardson, third_kind_differential)

E37 = WeierstrassCurveC(0, 0, 1, -1, 0)
E_CM = WeierstrassCurveC(0, 0, 0, -1, 0)


def _x(E):
    return lambda x, y: x


# -- lattice and Weierstrass functions ---------------------------------------

def test_real_period_against_quadrature():
    # y^2 = 4x^3 - 4x is y' = y/2 on y'^2 = x^3 - x, so dx/y is the invariant differential;
    # x = 1 + t^2 removes the endpoint singularity of 2 int_1^oo dx/y
    mpmath.mp.dps = 30
    oracle = 2 * mpmath.quad(lambda t: 1 / mpmath.sqrt((1 + t * t) * (2 + t * t)), [0, 1, mpmath.inf])
    mpmath.mp.dps = 15
    assert abs(E_CM.lattice.omega1 - float(oracle)) < 1e-10


def test_lattice_invariants_match_curve():
    for E in (E37, E_CM, WeierstrassCurveC(1, -1, 0, -11, 5), WeierstrassCurveC(0, 0, 0, 0, -4)):
        L = E.lattice
        g2, g3 = lattice_invariants(L.omega1, L.omega2)
        assert abs(g2 - E.c4 / 12) < 1e-10 * max(1, abs(E.c4))
        assert abs(g3 - E.c6 / 216) < 1e-10 * max(1, abs(E.c6))


def test_scaling_divides_periods():
    u = 3.0
    E2 = WeierstrassCurveC(0, 0, 0, -1 * u ** 4, 0)
    L, L2 = E_CM.lattice, E2.lattice
    for w in (L2.omega1, L2.omega2):
        assert L.distance_to_lattice(u * w) < 1e-12
    assert abs(L2.omega1 - L.omega1 / u) < 1e-13


def test_orientation():
    assert (E37.lattice.tau).imag > 0
    assert WeierstrassCurveC(0, 0, 0, 0, -1).lattice.tau.imag > 0


def test_sigma_and_zeta_against_theta():
    L = E37.lattice
    tau = L.tau
    q = cmath.exp(1j * math.pi * tau)
    w1 = L.omega1
    for z in (0.3 + 0.2j, 0.77 + 0.9j, 1.9 - 0.4j):
        v = math.pi * z / w1
        th1 = complex(mpmath.jtheta(1, v, q))
        dth1 = complex(mpmath.jtheta(1, v, q, 1))
        eta1 = L.quasi_periods()[0]
        # eta1 is the quasi-period of the full period w1
        sigma = (w1 / math.pi) * cmath.exp(eta1 * z * z / (2 * w1)) * th1 / complex(mpmath.jtheta(1, 0, q, 1))
        assert abs(L.log_abs_sigma(z) - math.log(abs(sigma))) < 1e-12
        assert abs(L.zeta(z) - (eta1 * z / w1 + (math.pi / w1) * dth1 / th1)) < 1e-10


def test_wp_satisfies_differential_equation():
    L = E37.lattice
    g2, g3 = E37.c4 / 12, E37.c6 / 216
    for z in (0.3 + 0.2j, 1.1 + 0.7j):
        p, dp = L.wp(z), L.wp_prime(z)
        assert abs(dp ** 2 - (4 * p ** 3 - g2 * p - g3)) < 1e-9 * abs(dp) ** 2


def test_elliptic_log_inverts_parametrization():
    for P in (CurvePoint(0, 0), CurvePoint(1, 0), CurvePoint(6, 14), CurvePoint(-1, -1)):
        x, y = E37.xy_from_z(E37.elliptic_log(P))
        assert abs(x - P.x) < 1e-10 and abs(y - P.y) < 1e-10
    assert E37.elliptic_log(INFINITY) == 0


def test_singular_curve_rejected():
    with pytest.raises(SingularCurveError):
        WeierstrassCurveC(0, 1, 0, 0, 0)


# -- integration ---------------------------------------------------------------

def test_contractible_loop_and_residue():
    form = lambda z: 1 / (z - 0.5) + np.exp(z)
    loop = IntegrationPath.circle(3.0, 0.5, n=12)
    val, _ = integrate(form, loop)
    assert abs(val) < 1e-12
    val, _ = integrate(form, IntegrationPath.circle(0.5, 0.1, n=12))
    assert abs(val - 2j * math.pi) < 1e-12
    assert abs(circle_integral(form, 0.5, 0.1) - 2j * math.pi) < 1e-12


def test_path_additivity():
    form = lambda z: z ** 2 + 1j
    a, b = IntegrationPath.polyline(0, 1 + 1j), IntegrationPath.polyline(1 + 1j, 2)
    whole, _ = integrate(form, a + b)
    parts = integrate(form, a)[0] + integrate(form, b)[0]
    assert abs(whole - parts) < 1e-14
    assert abs(whole - (8 / 3 + 2j)) < 1e-13


# -- third-kind differentials ----------------------------------------------------

@pytest.fixture(scope="module")
def eta37():
    return third_kind_differential(E37, CurvePoint(0, 0), INFINITY)


def test_residues(eta37):
    zp = E37.elliptic_log(CurvePoint(0, 0))
    assert abs(residue(eta37, zp, 0.05) - 1) < 1e-10
    assert abs(residue(eta37, 0j, 0.05) + 1) < 1e-10


def test_periods_purely_imaginary(eta37):
    for w in eta37.periods:
        assert abs(w.real) < 1e-9 * abs(w)


def test_swap_negates(eta37):
    other = third_kind_differential(E37, INFINITY, CurvePoint(0, 0))
    for w, v in zip(eta37.periods, other.periods):
        assert abs(w + v) < 1e-9
    z = 0.4 + 0.3j
    assert abs(eta37(z) + other(z)) < 1e-9


def test_two_torsion_pole():
    # (0, 0) is 2-torsion on y^2 = x^3 - x; the seed needs a shifted base point
    eta = third_kind_differential(E_CM, CurvePoint(0, 0), INFINITY)
    assert eta.shift != 0
    zp = E_CM.elliptic_log(CurvePoint(0, 0))
    assert abs(residue(eta, zp, 0.05) - 1) < 1e-10
    assert max(abs(w.real) for w in eta.periods) < 1e-9


# -- regularized integrals ---------------------------------------------------------

@pytest.mark.parametrize("p,q,sp,sq,expected", [
    (0, 1, 1, 1, 0.0),
    (0, 2, 1, 1, -2 * math.log(2)),
])
def test_genus0_closed_form(p, q, sp, sq, expected):
    assert genus0_regularized_integral(p, q, sp, sq) == pytest.approx(expected, abs=1e-15)


def test_genus0_scale_rule():
    base = genus0_regularized_integral(0.3, 1 + 1j, 1, 1)
    assert genus0_regularized_integral(0.3, 1 + 1j, 2, 1) == pytest.approx(base - math.log(2), abs=1e-15)


def test_genus0_numeric_matches_closed_form():
    rng = np.random.default_rng(11)
    for _ in range(5):
        p, q = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        sp, sq = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        u = lambda z, p=p, sp=sp: sp * (z - p) + (z - p) ** 2
        v = lambda z, q=q, sq=sq: sq * (z - q) * (1 + 0.5 * (z - q))
        res = regularized_integral(P1, p, q, u, v)
        assert abs(res.value - genus0_regularized_integral(p, q, sp, sq)) < 1e-8


def test_richardson_linear_model():
    h = 2.0 ** -np.arange(6, 14)
    est, err, _ = richardson(3.0 + 0.5 * h + 0.1 * h ** 2, 2.0, 1)
    assert abs(est - 3.0) < 1e-12 and err < 1e-10


@pytest.fixture(scope="module")
def reg37(eta37):
    return regularized_integral(E37, CurvePoint(0, 0), INFINITY, _x(E37), lambda x, y: x / y, eta=eta37)


def test_regularized_value(reg37):
    # the canonical height of (0, 0) on 37a, doubled
    assert abs(reg37.value - 0.0511114082399688) < 1e-8
    assert reg37.error < 1e-9


def test_same_differential_same_value(reg37, eta37):
    # u' = x + x^2 has du' = du at (0, 0)
    res = regularized_integral(E37, CurvePoint(0, 0), INFINITY, lambda x, y: x + x * x,
                               lambda x, y: x / y, eta=eta37)
    assert abs(res.value - reg37.value) < 1e-8


def test_scaled_coordinate(reg37, eta37):
    res = regularized_integral(E37, CurvePoint(0, 0), INFINITY, lambda x, y: 5 * x,
                               lambda x, y: x / y, eta=eta37)
    assert abs(res.value - (reg37.value - math.log(5))) < 1e-8


def test_approach_direction_independence(reg37, eta37):
    res = regularized_integral(E37, CurvePoint(0, 0), INFINITY, _x(E37), lambda x, y: x / y, eta=eta37,
                               angle_p=1.1, angle_q=-2.0)
    assert abs(res.value - reg37.value) < 1e-8


def test_nonconvergence_is_reported(eta37):
    # u does not vanish at P, so the limit diverges
    with pytest.raises(NonConvergenceError):
        regularized_integral(E37, CurvePoint(0, 0), INFINITY, lambda x, y: x - 1, lambda x, y: x / y,
                             eta=eta37, offsets=[2.0 ** -j for j in range(8, 14)])


# -- disjoint pairing ---------------------------------------------------------------

D1 = [(CurvePoint(0, 0), 1), (CurvePoint(1, 0), -1)]
D2 = [(CurvePoint(6, 14), 1), (CurvePoint(-1, -1), -1)]


def test_disjoint_pairing_symmetric():
    a, ea = archimedean_disjoint_pairing(E37, D1, D2)
    b, eb = archimedean_disjoint_pairing(E37, D2, D1)
    assert abs(a - b) < 1e-8


def test_disjoint_pairing_zero_divisor():
    assert archimedean_disjoint_pairing(E37, [(CurvePoint(0, 0), 1), (CurvePoint(0, 0), -1)], D2)[0] == 0


def test_disjoint_pairing_overlap():
    with pytest.raises(OverlappingSupportError):
        archimedean_disjoint_pairing(E37, D1, [(CurvePoint(0, 0), 1), (INFINITY, -1)])


def test_rerouting_changes_by_imaginary_period():
    eta = divisor_differential(E37, D2)
    L = E37.lattice
    start = 0.5 * L.omega1 + 0.45 * L.omega2
    z = E37.elliptic_log(CurvePoint(0, 0))
    direct, _ = integrate(eta, IntegrationPath.polyline(start, z))
    around, _ = integrate(eta, IntegrationPath.polyline(start, start + L.omega1, z + L.omega1))
    assert abs(direct.real - around.real) < 1e-8
