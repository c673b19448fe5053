"""Periodic spatial grid, wavefunctions and spectral operators.

Units are fixed to hbar = 1 and 2m = 1, so the adiabatic Hamiltonian is
``H = p**2 + u(x)`` with ``p = -i d/dx``.  All derivatives are spectral
(FFT based) on a uniform periodic grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import InvalidArgumentError, NumericError


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8:
            raise InvalidArgumentError(f"n_points must be an integer >= 8, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise InvalidArgumentError("x_max must exceed x_min")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.spacing * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.spacing


@dataclass
class Wavefunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise InvalidArgumentError(
                f"expected {self.grid.n_points} samples, got shape {self.values.shape}")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.spacing))

    def normalize(self) -> "Wavefunction":
        n = self.norm()
        if not np.isfinite(n) or n == 0:
            raise NumericError("cannot normalize a zero or non-finite wavefunction")
        return Wavefunction(self.grid, self.values / n)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass
class OperatorMatrix:
    entries: np.ndarray
    hermitian: bool = False
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not sparse.issparse(self.entries):
            self.entries = np.asarray(self.entries)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise InvalidArgumentError("operator matrix must be square")
        if self.hermitian and not self._checked:
            scale = abs(self.entries).max() or 1.0
            err = abs(self.entries - self.entries.conj().T).max()
            if err >= 1e-12 * scale:
                raise NumericError(f"matrix flagged hermitian but |A - A^H| = {err:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.entries)

    def dense(self) -> np.ndarray:
        return self.entries.toarray() if self.is_sparse else self.entries


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite values in input")


def spectral_derivative(values, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Spectral ``d^order/dx^order`` of periodic samples.

    The Nyquist mode is dropped for odd orders so that real input gives real
    output and ``p = -i d/dx`` stays Hermitian.
    """
    if int(order) != order or not 1 <= order <= 5:
        raise InvalidArgumentError(f"derivative order must be in 1..5, got {order}")
    values = np.asarray(values)
    _check_finite(values)
    mult = _derivative_multiplier(grid, int(order))
    out = np.fft.ifft(mult * np.fft.fft(values))
    if np.isrealobj(values):
        return out.real
    return out


@lru_cache(maxsize=64)
def _derivative_multiplier(grid: Grid1D, order: int) -> np.ndarray:
    k = grid.k
    mult = (1j * k) ** order
    if order % 2 == 1 and grid.n_points % 2 == 0:
        mult[grid.n_points // 2] = 0.0
    return mult


def derivative(psi: Wavefunction, order: int = 1) -> Wavefunction:
    return Wavefunction(psi.grid, spectral_derivative(psi.values, psi.grid, order))


def apply_momentum(values, grid: Grid1D, power: int = 1) -> np.ndarray:
    """``p**power`` applied to samples, ``p = -i d/dx``."""
    return (-1j) ** power * spectral_derivative(np.asarray(values, dtype=complex), grid, power)


@lru_cache(maxsize=16)
def _derivative_matrix(grid: Grid1D, order: int) -> np.ndarray:
    eye = np.eye(grid.n_points)
    mult = _derivative_multiplier(grid, order)[:, None]
    mat = np.fft.ifft(mult * np.fft.fft(eye, axis=0), axis=0)
    if order % 2 == 0:
        mat = mat.real
        return 0.5 * (mat + mat.T)
    mat = mat.real
    return 0.5 * (mat - mat.T)


def derivative_matrix(grid: Grid1D, order: int) -> np.ndarray:
    return _derivative_matrix(grid, order).copy()


def momentum_matrix(grid: Grid1D) -> OperatorMatrix:
    return OperatorMatrix(-1j * _derivative_matrix(grid, 1), hermitian=True)


def hamiltonian_matrix(u_samples, grid: Grid1D) -> OperatorMatrix:
    """Dense ``-d^2/dx^2 + u`` on the grid."""
    u = np.asarray(u_samples, dtype=float)
    if u.shape != (grid.n_points,):
        raise InvalidArgumentError(f"potential has shape {u.shape}, grid has {grid.n_points} points")
    _check_finite(u)
    h = -_derivative_matrix(grid, 2).copy()
    h[np.diag_indices_from(h)] += u
    return OperatorMatrix(h, hermitian=True, _checked=True)


def cd3_matrix(u_samples, grid: Grid1D, a: float = -4.0, c1: float = 0.0) -> OperatorMatrix:
    """Matrix of ``a [p^3 + 3/4 (p u + u p)] + c1 p``."""
    u = np.diag(np.asarray(u_samples, dtype=float))
    p = -1j * _derivative_matrix(grid, 1)
    p3 = 1j * _derivative_matrix(grid, 3)
    h = a * (p3 + 0.75 * (p @ u + u @ p)) + c1 * p
    return OperatorMatrix(0.5 * (h + h.conj().T), hermitian=True, _checked=True)


def operator_apply_cd3(psi: Wavefunction, u, a: float, c1: float) -> Wavefunction:
    """``a [p^3 psi + 3/4 (p(u psi) + u p psi)] + c1 p psi`` with spectral ``p``."""
    u = np.asarray(u, dtype=float)
    if u.shape != psi.values.shape:
        raise InvalidArgumentError("potential and wavefunction sampled on different grids")
    _check_finite(u)
    _check_finite(psi.values)
    g = psi.grid
    v = psi.values
    pv = apply_momentum(v, g)
    out = a * (apply_momentum(v, g, 3) + 0.75 * (apply_momentum(u * v, g) + u * pv)) + c1 * pv
    return Wavefunction(g, out)


def interior_probe(grid: Grid1D, x_extent: float | None = None, k_extent: float | None = None,
                   center: float | None = None) -> np.ndarray:
    """Orthonormal columns spanning smooth states localized in the box interior.

    Hermite functions whose classical extent stays within ``x_extent`` of
    ``center`` in position and ``k_extent`` in wavenumber.  Compressing an
    operator identity onto this subspace removes both the aliasing of the
    highest grid modes and the non-periodic jump of ``x`` at the box edge.
    """
    if x_extent is None:
        x_extent = 0.3 * grid.length
    if k_extent is None:
        k_extent = 0.25 * grid.k_nyquist
    if center is None:
        center = 0.5 * (grid.x_min + grid.x_max)
    sigma = np.sqrt(x_extent / k_extent)
    n_states = max(2, int((x_extent / sigma) ** 2 / 2))
    z = (grid.x - center) / sigma
    basis = np.empty((grid.n_points, n_states))
    h_prev = np.zeros_like(z)
    h_cur = np.pi ** -0.25 * np.exp(-0.5 * z ** 2)
    basis[:, 0] = h_cur
    for n in range(1, n_states):
        h_next = np.sqrt(2.0 / n) * z * h_cur - np.sqrt((n - 1) / n) * h_prev
        h_prev, h_cur = h_cur, h_next
        basis[:, n] = h_cur
    q, _ = np.linalg.qr(basis)
    return q


def invariant_residual(h_ad_pair, h_cd: OperatorMatrix, h_ad: OperatorMatrix, eps: float,
                       probe="interior", grid: Grid1D | None = None) -> float:
    """Relative Frobenius residual of ``i dH_ad/dt = [H_cd, H_ad]``.

    ``h_ad_pair`` holds ``H_ad(t - eps)`` and ``H_ad(t + eps)``.  With
    ``probe="interior"`` (needs ``grid``) or an explicit orthonormal matrix
    ``Q``, the residual ``R`` is compressed to ``Q^H R Q``; ``probe=None``
    uses the full matrices.  Operators are applied to the probe columns
    rather than multiplied together, which keeps the cancellation in the
    commutator free of the large high-mode entries.
    """
    lo, hi = (np.asarray(getattr(m, "entries", m)) for m in h_ad_pair)
    hcd = np.asarray(getattr(h_cd, "entries", h_cd))
    had = np.asarray(getattr(h_ad, "entries", h_ad))
    shapes = {lo.shape, hi.shape, hcd.shape, had.shape}
    if len(shapes) != 1:
        raise InvalidArgumentError(f"dimension mismatch: {sorted(shapes)}")
    if isinstance(probe, str):
        if probe != "interior" or grid is None:
            raise InvalidArgumentError("probe='interior' requires the grid")
        probe = interior_probe(grid)
    q = np.eye(had.shape[0]) if probe is None else probe
    dh_q = (hi @ q - lo @ q) / (2 * eps)
    comm_q = hcd @ (had @ q) - had @ (hcd @ q)
    resid = q.conj().T @ (1j * dh_q - comm_q)
    return float(np.linalg.norm(resid) / np.linalg.norm(q.conj().T @ (had @ q)))
