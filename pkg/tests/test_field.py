import numpy as np
import pytest
from hypothesis import given, strategies as st

from lax_shortcuts.errors import InvalidArgumentError, NumericError
from lax_shortcuts.field import (Grid1D, OperatorMatrix, Wavefunction, apply_momentum, cd3_matrix,
                                 derivative, derivative_matrix, hamiltonian_matrix, interior_probe,
                                 invariant_residual, operator_apply_cd3, spectral_derivative)
from lax_shortcuts.kdv import single_soliton, traveling_sech2


def test_grid_rejects_bad_sizes():
    with pytest.raises(InvalidArgumentError):
        Grid1D(0.0, 1.0, 4)
    with pytest.raises(InvalidArgumentError):
        Grid1D(1.0, 0.0, 64)


def test_derivative_of_constant_vanishes(grid512):
    assert np.max(np.abs(spectral_derivative(np.ones(512), grid512))) < 1e-14


def test_derivative_of_sine(grid512):
    k = 2 * np.pi / grid512.length
    x = grid512.x
    err = np.max(np.abs(spectral_derivative(np.sin(k * x), grid512) - k * np.cos(k * x)))
    assert err < 1e-10


def test_second_derivative_matches_refined_finite_differences(grid512):
    x = grid512.x
    h = grid512.spacing / 2
    f = lambda z: np.exp(-z ** 2)
    fd = (f(x + h) - 2 * f(x) + f(x - h)) / h ** 2
    fd2 = (f(x + h / 2) - 2 * f(x) + f(x - h / 2)) / (h / 2) ** 2
    oracle = (4 * fd2 - fd) / 3
    assert np.max(np.abs(spectral_derivative(f(x), grid512, 2) - oracle)) < 1e-6


@pytest.mark.parametrize("order", [0, 6, 1.5])
def test_derivative_order_range(grid512, order):
    with pytest.raises(InvalidArgumentError):
        spectral_derivative(np.ones(512), grid512, order)


def test_derivative_rejects_nonfinite(grid512):
    v = np.ones(512)
    v[3] = np.nan
    with pytest.raises(NumericError):
        derivative(Wavefunction(grid512, v))


@given(st.integers(1, 5), st.integers(-6, 6))
def test_plane_wave_eigenfunction_of_derivative(order, m):
    g = Grid1D(-10.0, 10.0, 64)
    k = 2 * np.pi * m / g.length
    v = np.exp(1j * k * g.x)
    assert np.allclose(spectral_derivative(v, g, order), (1j * k) ** order * v, atol=1e-9 * max(1, abs(k)) ** order)


@given(st.integers(1, 5))
def test_derivative_matrix_parity(order):
    g = Grid1D(-5.0, 5.0, 32)
    D = derivative_matrix(g, order)
    sign = -1 if order % 2 else 1
    assert np.allclose(D, sign * D.T, atol=1e-12)


def test_free_hamiltonian_spectrum_is_k_squared():
    g = Grid1D(-5.0, 5.0, 32)
    ev = np.linalg.eigvalsh(hamiltonian_matrix(np.zeros(32), g).entries)
    expected = np.sort(g.k ** 2)
    assert np.allclose(ev, expected, atol=1e-9)
    # +-k degenerate pairs
    assert np.isclose(ev[1], ev[2])


def test_hamiltonian_length_mismatch(grid512):
    with pytest.raises(InvalidArgumentError):
        hamiltonian_matrix(np.zeros(511), grid512)


def test_single_soliton_lowest_level(grid512):
    u = single_soliton(1.0)
    ev = np.linalg.eigvalsh(hamiltonian_matrix(u.sample(grid512, 0.0), grid512).entries)
    assert abs(ev[0] + 1.0) < 1e-4


def test_operator_matrix_validation():
    with pytest.raises(InvalidArgumentError):
        OperatorMatrix(np.zeros((2, 3)))
    with pytest.raises(NumericError):
        OperatorMatrix(np.array([[0, 1], [0, 0]]), hermitian=True)


def test_cd3_on_plane_wave():
    g = Grid1D(-10.0, 10.0, 64)
    k = 2 * np.pi * 3 / g.length
    psi = Wavefunction(g, np.exp(1j * k * g.x))
    out = operator_apply_cd3(psi, np.zeros(64), a=-4.0, c1=0.0)
    assert np.allclose(out.values, -4.0 * k ** 3 * psi.values)


def test_cd3_linear_term_is_scale_invariant_driving():
    g = Grid1D(-10.0, 10.0, 64)
    psi = Wavefunction(g, np.exp(-g.x ** 2))
    out = operator_apply_cd3(psi, np.zeros(64), a=0.0, c1=0.7)
    assert np.allclose(out.values, 0.7 * apply_momentum(psi.values, g))


def test_cd3_matches_dense_matrix(grid512):
    u = single_soliton(1.0).sample(grid512, 0.0)
    psi = Wavefunction(grid512, 1 / np.cosh(grid512.x)).normalize()
    direct = operator_apply_cd3(psi, u, -4.0, 0.0).values
    dense = cd3_matrix(u, grid512).entries @ psi.values
    assert np.max(np.abs(direct - dense)) < 1e-8


def test_cd3_rejects_nonfinite(grid512):
    psi = Wavefunction(grid512, np.ones(512))
    u = np.zeros(512)
    u[0] = np.inf
    with pytest.raises(NumericError):
        operator_apply_cd3(psi, u, -4.0, 0.0)


def test_interior_probe_is_orthonormal(grid512):
    Q = interior_probe(grid512)
    assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-10)
    edge = np.max(np.abs(Q[:20])) + np.max(np.abs(Q[-20:]))
    assert edge < 1e-8


def _residual(u, grid, t, eps=1e-4, a=-4.0):
    pair = [hamiltonian_matrix(u.sample(grid, t + s), grid) for s in (-eps, eps)]
    return invariant_residual(pair, cd3_matrix(u.sample(grid, t), grid, a=a),
                              hamiltonian_matrix(u.sample(grid, t), grid), eps, grid=grid)


def test_invariant_residual_static_system(grid512):
    h = hamiltonian_matrix(np.zeros(512), grid512)
    zero = OperatorMatrix(np.zeros((512, 512)))
    assert invariant_residual((h, h), zero, h, 1e-3, grid=grid512) == 0.0


def test_invariant_residual_certifies_single_soliton(grid512):
    u = single_soliton(1.0)
    assert _residual(u, grid512, 0.1) < 1e-6
    assert _residual(u, grid512, 0.1, a=-2.0) > 1e-2


def test_invariant_residual_dimension_mismatch(grid512):
    small = OperatorMatrix(np.eye(4))
    h = hamiltonian_matrix(np.zeros(512), grid512)
    with pytest.raises(InvalidArgumentError):
        invariant_residual((h, h), small, h, 1e-3, probe=None)


def test_translational_sech_is_certified_with_linear_term(grid512):
    # a static profile dragged at speed c is driven by c p alone
    c = 0.8
    u = traveling_sech2(1.0, c)
    eps = 1e-4
    pair = [hamiltonian_matrix(u.sample(grid512, s), grid512) for s in (-eps, eps)]
    hcd = cd3_matrix(u.sample(grid512, 0.0), grid512, a=0.0, c1=c)
    r = invariant_residual(pair, hcd, hamiltonian_matrix(u.sample(grid512, 0.0), grid512), eps, grid=grid512)
    assert r < 1e-6
