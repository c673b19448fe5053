import numpy as np
import pytest
from hypothesis import given, strategies as st

from lax_shortcuts.errors import CapabilityError, InvalidArgumentError, PreconditionError
from lax_shortcuts.extensions import (CDSpec, DressedKdVField, GammaSchedule, ScaleInvariantField, XYInvariantCoeffs,
                                      alpha_extension_check, alpha_extension_fixture, alpha_schedule,
                                      dressed_kdv_coefficient, generalized_kdv_residual, instantaneous_energies,
                                      richardson_derivative, scaled_invariant_residual, second_order_ansatz_check,
                                      toda_reduced_coeffs, xy_equation_residuals, xy_invariant_residual,
                                      xy_matrix_residual)
from lax_shortcuts.field import Grid1D
from lax_shortcuts.kdv import SolitonParams, double_soliton, kdv_residual, traveling_sech2
from lax_shortcuts.spacetime import FunctionField, PolynomialWell
from lax_shortcuts.toda import n3_closed_form

GRID = Grid1D(-20.0, 20.0, 512)
N3 = lambda t: n3_closed_form(1.0, 2.0, t)


def const(v):
    return lambda t: np.asarray(v, dtype=float)


def test_richardson_derivative():
    assert richardson_derivative(np.sin, 0.4, 1e-3) == pytest.approx(np.cos(0.4), abs=1e-12)


@given(st.floats(-1.5, 1.5))
def test_toda_reduction_satisfies_invariant_conditions(t):
    red = toda_reduced_coeffs(N3)
    assert xy_invariant_residual(red, t) < 1e-7
    assert xy_matrix_residual(red, t) < 1e-7


def test_static_coefficients_with_uniform_field():
    c = XYInvariantCoeffs(const([0.4, 0.7]), const([0.1, -0.2]), const([0.3, 0.3, 0.3]),
                          const([0.0, 0.0]), const([1.0, 1.0, 1.0]))
    assert xy_invariant_residual(c, 0.0) == 0.0


def test_perturbed_b_is_detected():
    red = toda_reduced_coeffs(N3)
    bad = XYInvariantCoeffs(red.a, lambda t: red.b(t) + 1e-2, red.c, red.d, red.h)
    assert xy_invariant_residual(bad, 0.3) > 1e-3


def test_length_mismatch():
    c = XYInvariantCoeffs(const([1.0]), const([1.0, 2.0]), const([0.0, 0.0]), const([1.0]), const([0.0, 0.0]))
    with pytest.raises(InvalidArgumentError):
        xy_equation_residuals(c, 0.0)


def test_alpha_schedule_vanishes_flat_at_tau():
    alpha, alpha_dot = alpha_schedule(2.0)
    assert alpha(2.0) == 0.0 and alpha_dot(2.0) == 0.0 and alpha(0.0) == pytest.approx(1.0)
    assert richardson_derivative(alpha, 0.7, 1e-4) == pytest.approx(alpha_dot(0.7), abs=1e-9)


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_alpha_fixture(k, mu, tau):
    fx = alpha_extension_fixture(1.0, 2.0, tau, k, mu)
    times = np.linspace(0, tau, 7)[1:-1]
    assert max(xy_invariant_residual(fx, t) for t in times) < 1e-7
    rep = alpha_extension_check(fx, tau, times)
    assert rep.ok, rep.violations
    assert rep.commutator_norm < 1e-8


def test_alpha_check_requires_vanishing_alpha():
    red = toda_reduced_coeffs(N3)  # alpha = -1 everywhere
    with pytest.raises(PreconditionError):
        alpha_extension_check(red, 1.0)
    fx = alpha_extension_fixture()
    flat = XYInvariantCoeffs(fx.a, fx.b, fx.c, fx.d, fx.h, alpha=lambda t: 0.0, beta=fx.beta)
    rep = alpha_extension_check(flat, 1.0)
    assert not rep.ok


def test_gamma_schedule_validation():
    with pytest.raises(InvalidArgumentError):
        GammaSchedule.linear(-1.0).validate((0.0, 2.0))
    bad = GammaSchedule(lambda t: 1 + t, lambda t: 2.0)
    with pytest.raises(InvalidArgumentError):
        bad.validate((0.0, 1.0))
    assert GammaSchedule.exponential(0.3).validate((0.0, 1.0)).rate(0.5) == pytest.approx(0.3)


@given(st.floats(-0.15, 0.3), st.floats(0.0, 5.0))
def test_harmonic_energies_scale(rate, t):
    g = GammaSchedule.linear(rate)
    well = ScaleInvariantField(PolynomialWell([0.0, 0.0, 1.0]), g)
    E0 = instantaneous_energies(well, GRID, 0.0, 3)
    Et = instantaneous_energies(well, GRID, t, 3)
    assert np.allclose(Et, E0 / g.gamma(t) ** 2, rtol=1e-4)


def test_scaled_invariant_and_controls():
    g = GammaSchedule.linear(0.1)
    u = ScaleInvariantField(traveling_sech2(1.0, 0.0), g)
    assert scaled_invariant_residual(u, g, CDSpec(), GRID, 1.0) < 1e-7
    assert scaled_invariant_residual(u, g, CDSpec(dilation=1.0), GRID, 1.0) > 1e-3
    with pytest.raises(InvalidArgumentError):
        scaled_invariant_residual(u, GammaSchedule.linear(-1.0), CDSpec(), GRID, 2.0)


def test_translational_limit():
    g = GammaSchedule.constant(0.6)
    u = ScaleInvariantField(traveling_sech2(1.0, 0.0), g)
    assert scaled_invariant_residual(u, g, CDSpec(), GRID, 0.5) < 1e-7
    assert scaled_invariant_residual(u, g, CDSpec(v=lambda t: 0.0), GRID, 0.5) > 1e-3


def test_second_order_ansatz_adds_nothing():
    g = GammaSchedule.exponential(0.2)
    u = ScaleInvariantField(traveling_sech2(1.0, 0.0), g)
    rep = second_order_ansatz_check(u, g, GRID, 0.7)
    assert rep["fit_residual"] < 1e-8 and rep["outside_span"] < 1e-8


@given(st.floats(-0.1, 0.1), st.floats(0.0, 3.0), st.floats(-8, 8))
def test_dressed_double_soliton(rate, t, x):
    p = SolitonParams((1.2, 1.0), (3.0, 3.0))
    g = GammaSchedule.exponential(rate)
    u = DressedKdVField(double_soliton(p), g)
    a = dressed_kdv_coefficient(g, t)
    assert abs(generalized_kdv_residual(u, g, a, 0.0, x, t)) < 1e-6
    gm = g.gamma(t)
    deformed = double_soliton(SolitonParams((1.2 / gm, 1.0 / gm), (3.0, 3.0)))
    assert u(x, t) == pytest.approx(deformed(x, t), abs=1e-10)


def test_constant_gamma_is_bit_identical(demo):
    u = double_soliton(demo)
    x = np.linspace(-10, 10, 101)
    g = GammaSchedule.constant()
    for t in (-1.0, 0.0, 0.5):
        assert np.array_equal(generalized_kdv_residual(u, g, -4.0, 0.0, x, t), kdv_residual(u, x, t))


def test_generalized_residual_capability():
    with pytest.raises(CapabilityError):
        generalized_kdv_residual(FunctionField(lambda x, t: x), GammaSchedule.linear(0.1), -4.0, 0.0, 0.0, 0.0)
