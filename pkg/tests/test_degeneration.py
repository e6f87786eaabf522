from fractions import Fraction as F
import cmath
import math

import numpy as np
import pytest

from nodal_heights.curve_analytic import genus0_regularized_integral
from nodal_heights.degeneration import (FamilyError, NodalFamily, corner_from_samples, fiber_periods,
                                        lmhs_corner, lmhs_height, lmhs_period_matrix, monodromy_check,
                                        normalization_oracle, normalization_regularized_integral)

FAM = NodalFamily.from_polynomial("x^3+x^2")
LOG2 = math.log(2)


@pytest.fixture(scope="module")
def corner():
    return lmhs_corner(FAM)


def test_parse_family():
    assert (FAM.r, FAM.s, FAM.d) == (0, -1, 1)
    assert FAM.t_max == pytest.approx(4 / 27)
    G = NodalFamily.from_polynomial("x^3 - 3*x + 2")
    assert (G.r, G.s) == (1, -2)
    assert G.cubic_coeffs == (0, -3, 2)


@pytest.mark.parametrize("text", ["x^3", "x^3 - x", "2*x^3 + x^2", "x^2", "x^3 + y", "(x-1)^2*(x-2)**"])
def test_parse_family_rejects(text):
    with pytest.raises(FamilyError):
        NodalFamily.from_polynomial(text)


def test_t_outside_disc():
    with pytest.raises(FamilyError):
        fiber_periods(FAM, 0.2)
    with pytest.raises(FamilyError):
        fiber_periods(FAM, 0)


def test_vanishing_period():
    data = fiber_periods(FAM, 1e-6)
    assert abs(data.vanishing - 2j * math.pi) < 1e-3
    assert data.tau.imag > 0


def test_conjugate_base_point():
    t = 1e-3 * cmath.exp(0.7j)
    La, Lb = FAM.fiber(t).lattice, FAM.fiber(t.conjugate()).lattice
    for w in (La.omega1, La.omega2):
        assert Lb.distance_to_lattice(w.conjugate()) < 1e-10
    # conjugation reverses orientation: the vanishing cycle maps to minus itself
    a, b = fiber_periods(FAM, t), fiber_periods(FAM, t.conjugate())
    assert abs(a.vanishing.conjugate() + b.vanishing) < 1e-9


def test_closed_form_on_normalization():
    # x = s^2 - 1, y = s(s^2 - 1): scales 4 at both preimages of the node
    assert normalization_oracle(FAM) == pytest.approx(-6 * LOG2, abs=1e-14)
    assert normalization_oracle(FAM) == genus0_regularized_integral(1, -1, 4, 4)
    res = normalization_regularized_integral(FAM)
    assert abs(res.value - normalization_oracle(FAM)) < 1e-8


def test_corner_matches_closed_form(corner):
    assert abs(corner.real - normalization_oracle(FAM)) < 1e-6
    assert corner.error < 1e-6
    assert abs(corner.value.imag - math.pi) < 1e-6


def test_corner_independent_of_sequence(corner):
    halves = lmhs_corner(FAM, [10.0 ** (-k / 2) / 2 for k in range(6, 17)])
    assert abs(halves.real - corner.real) < 1e-6
    decades = lmhs_corner(FAM, [10.0 ** -j for j in range(2, 9)])
    assert abs(decades.real - corner.real) < 1e-6


def test_other_alpha_representative(corner):
    # moving alpha by the vanishing cycle shifts the limit by 2 pi i
    ts = [t for t, _ in corner.samples]
    shifted = [s + fiber_periods(FAM, t).vanishing for t, s in corner.samples]
    other = corner_from_samples(ts, shifted)
    assert abs(other.real - corner.real) < 1e-6
    assert abs(other.value.imag - corner.value.imag - 2 * math.pi) < 1e-6


@pytest.mark.parametrize("lam", [2, F(1, 3), 5])
def test_scaling_law(corner, lam):
    moved = lmhs_corner(FAM.reparametrize(lam))
    assert abs(moved.real - corner.real + math.log(lam)) < 1e-7


def test_second_family():
    G = NodalFamily.from_polynomial("x^3 - 3*x + 2")
    est = lmhs_corner(G)
    assert abs(est.real - normalization_oracle(G)) < 1e-6
    assert normalization_oracle(G) == pytest.approx(-2 * math.log(2 * math.sqrt(3)) - 2 * math.log(12),
                                                    abs=1e-13)


def test_period_matrix_and_height(corner):
    M = lmhs_period_matrix(FAM, corner.value)
    assert M.full().shape == (1, 2)
    assert M.full()[0, 1] == 2j * math.pi
    assert lmhs_height(FAM) == pytest.approx(corner.real, abs=1e-9)


def test_monodromy():
    rep = monodromy_check(FAM, 0.01)
    assert rep.matrix == ((1, 0), (1, 1))
    assert rep.unipotent and rep.log_square_zero
    T = np.array(rep.matrix)
    N = T - np.eye(2, dtype=int)
    assert np.all(N @ N == 0)
    twice = monodromy_check(FAM, 0.01, loops=2)
    assert np.all(np.array(twice.matrix) == T @ T)


def test_monodromy_other_family():
    G = NodalFamily.from_polynomial("x^3 - 3*x + 2")
    assert monodromy_check(G, 0.01 * G.t_max).matrix == ((1, 0), (1, 1))
