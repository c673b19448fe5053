"""Open and truncated Toda flows for the coupling functions (J_n, h_n).

    dJ_n/dt = J_n (h_{n+1} - h_n),    dh_n/dt = 2 (J_n^2 - J_{n-1}^2)

``J`` has one entry per site; ``J[n]`` couples site n to n+1.  Under the
open boundary the last entry is held at zero.  The truncated infinite
chain instead attaches ghost sites with ``J = 1/2`` and ``h = 0`` at both
ends, which is the far field of the soliton solutions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import warnings

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .errors import DivergenceError, InvalidArgumentError
from .field import OperatorMatrix

BOUNDARIES = ("open", "infinite_truncated")
FAR_FIELD_J = 0.5


@dataclass
class TodaState:
    J: np.ndarray
    h: np.ndarray
    boundary: str = "open"

    def __post_init__(self):
        self.J = np.array(self.J, dtype=float)
        self.h = np.array(self.h, dtype=float)
        if self.J.shape != self.h.shape or self.J.ndim != 1:
            raise InvalidArgumentError(f"J and h must be 1-D of equal length, got {self.J.shape}, {self.h.shape}")
        if self.boundary not in BOUNDARIES:
            raise InvalidArgumentError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "open":
            self.J[-1] = 0.0

    @property
    def n_sites(self) -> int:
        return self.h.size

    @property
    def bonds(self) -> np.ndarray:
        """The N-1 internal couplings."""
        return self.J[:-1]

    def lax_L(self) -> np.ndarray:
        return np.diag(self.h) + np.diag(self.bonds, 1) + np.diag(self.bonds, -1)

    def eigenvalues(self) -> np.ndarray:
        return eigvalsh_tridiagonal(self.h, self.bonds)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.J, self.h])


def _from_vector(vec, like: TodaState) -> TodaState:
    n = like.n_sites
    return TodaState(vec[:n], vec[n:], like.boundary)


def _rhs_vec(J, h, boundary):
    if boundary == "open":
        J = J.copy()
        J[-1] = 0.0
        J_prev = np.concatenate([[0.0], J[:-1]])
        h_next = np.concatenate([h[1:], [0.0]])
    else:
        J_prev = np.concatenate([[FAR_FIELD_J], J[:-1]])
        h_next = np.concatenate([h[1:], [0.0]])
    dJ = J * (h_next - h)
    if boundary == "open":
        dJ[-1] = 0.0
    dh = 2 * (J ** 2 - J_prev ** 2)
    return dJ, dh


def toda_rhs(s: TodaState) -> TodaState:
    """Time derivative of the state, returned as a TodaState of rates."""
    dJ, dh = _rhs_vec(s.J, s.h, s.boundary)
    return TodaState(dJ, dh, s.boundary)


@dataclass
class TodaTrajectory:
    times: np.ndarray
    J: np.ndarray
    h: np.ndarray
    boundary: str

    def state(self, i: int) -> TodaState:
        return TodaState(self.J[i], self.h[i], self.boundary)

    def __len__(self):
        return self.times.size

    def eigenvalue_drift(self) -> float:
        ev = np.array([self.state(i).eigenvalues() for i in range(len(self))])
        return float(np.max(np.abs(ev - ev[0])))


def integrate_toda(s0: TodaState, t_span, dt: float, record_every: int = 1,
                   blowup: float = 1e6) -> TodaTrajectory:
    """Classical RK4 from ``t_span[0]`` to ``t_span[1]``; raises DivergenceError on blow-up."""
    t0, t1 = map(float, t_span)
    if not dt > 0:
        raise InvalidArgumentError("dt must be positive")
    n_steps = max(1, int(round(abs(t1 - t0) / dt)))
    step = (t1 - t0) / n_steps
    n = s0.n_sites
    b = s0.boundary

    def f(y):
        dJ, dh = _rhs_vec(y[:n], y[n:], b)
        return np.concatenate([dJ, dh])

    y = s0.as_vector()
    ts, ys = [t0], [y.copy()]
    for i in range(1, n_steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > blowup:
            raise DivergenceError(f"Toda integration blew up at t={t0 + i * step:.4g}")
        if i % record_every == 0 or i == n_steps:
            ts.append(t0 + i * step)
            ys.append(y.copy())
    ys = np.array(ys)
    return TodaTrajectory(np.array(ts), ys[:, :n], ys[:, n:], b)


def n3_closed_form(v1: float, v2: float, t) -> TodaState:
    """Three-site open-chain solution with ``J(0) = (v1, v2)`` and ``h(0) = 0``.

    With ``v = sqrt(v1^2 + v2^2)`` and ``s = sech(2 v t)``,
    ``J1 = v v1 sqrt(v1^2 s^2 + v2^2 s) / (v1^2 + v2^2 s)`` and
    ``h1 = v v1^2 tanh(2 v t) / (v1^2 + v2^2 s)``; the rest follow by
    exchanging v1 and v2 and from ``sum h = 0``.
    """
    if not (v1 > 0 and v2 > 0):
        raise InvalidArgumentError("v1 and v2 must be positive")
    v = np.hypot(v1, v2)
    arg = 2 * v * t
    s = 1.0 / np.cosh(arg) if abs(arg) < 700 else 0.0
    th = np.tanh(arg)

    def edge(a, b):
        den = a ** 2 + b ** 2 * s
        return v * a * np.sqrt(a ** 2 * s ** 2 + b ** 2 * s) / den, v * a ** 2 * th / den

    J1, h1 = edge(v1, v2)
    J2, h3m = edge(v2, v1)
    h3 = -h3m
    return TodaState([J1, J2, 0.0], [h1, -h1 - h3, h3], "open")


@dataclass
class LaxPairMatrices:
    L: OperatorMatrix
    M: OperatorMatrix


def lax_matrices(s: TodaState) -> LaxPairMatrices:
    """``L = tridiag(J, h, J)`` and antisymmetric ``M`` with ``M[n, n+1] = J_n`` so that ``dL/dt = [M, L]``.

    ``L`` is the single-flip block of the adiabatic Hamiltonian and
    ``M = -i H_cd`` for the counterdiabatic block built in :mod:`xy`.
    """
    if s.boundary != "open":
        raise InvalidArgumentError("Lax matrices are defined for the open chain")
    b = s.bonds
    M = np.diag(b, 1) - np.diag(b, -1)
    return LaxPairMatrices(OperatorMatrix(s.lax_L(), hermitian=True), OperatorMatrix(M))


def lax_residual(states_lo: TodaState, state_mid: TodaState, states_hi: TodaState, dt: float) -> float:
    """``||dL/dt - [M, L]||_F`` with a centered difference over ``2 dt``."""
    dL = (states_hi.lax_L() - states_lo.lax_L()) / (2 * dt)
    lp = lax_matrices(state_mid)
    L, M = lp.L.entries, lp.M.entries
    return float(np.linalg.norm(dL - (M @ L - L @ M)))


def _soliton_logs(n, t, kappa, c0):
    """``log D_n`` with ``D_n = 1 + c(t)^2 z^(2n) / (1 - z^2)``, ``z = exp(-kappa)``."""
    log_c2 = 2 * np.log(c0) + 2 * t * np.sinh(kappa)
    a = log_c2 - 2 * kappa * n
    return a, np.logaddexp(0.0, a - np.log1p(-np.exp(-2 * kappa)))


def toda_single_soliton(N: int, t: float, kappa: float, c0: float = 1.0, first_site: int = 1) -> TodaState:
    """Single Toda soliton on sites ``first_site .. first_site + N - 1`` of the infinite chain.

    ``J_n = (1/2) sqrt(D_n D_{n+2}) / D_{n+1}`` and
    ``h_n = (1/2) (c^2 z^(2n+1) / D_{n+1} - c^2 z^(2n-1) / D_n)`` with
    ``c(t) = c0 exp(t sinh kappa)``; everything is evaluated from logs so
    large ``t`` cannot overflow.
    """
    if not kappa > 0 or not c0 > 0:
        raise InvalidArgumentError("kappa and c0 must be positive")
    if int(N) != N or N < 2:
        raise InvalidArgumentError("N must be an integer >= 2")
    n = np.arange(first_site, first_site + N, dtype=float)
    a, lD = _soliton_logs(n, t, kappa, c0)
    _, lD1 = _soliton_logs(n + 1, t, kappa, c0)
    _, lD2 = _soliton_logs(n + 2, t, kappa, c0)
    J = 0.5 * np.exp(0.5 * (lD + lD2) - lD1)
    h = 0.5 * (np.exp(a - kappa - lD1) - np.exp(a + kappa - lD))
    if abs(J[0] - FAR_FIELD_J) > 1e-6 or abs(J[-1] - FAR_FIELD_J) > 1e-6:
        warnings.warn("soliton not relaxed at the chain ends; enlarge N or shift the window",
                      RuntimeWarning, stacklevel=2)
    return TodaState(J, h, "infinite_truncated")


def soliton_peak_site(t: float, kappa: float, c0: float = 1.0) -> float:
    """Site where ``c^2 z^(2n) ~ 1``, i.e. ``kappa n ~ t sinh kappa + ln c0``."""
    return (t * np.sinh(kappa) + np.log(c0)) / kappa


def moser_limit(s0: TodaState, t_final: float | None = None, dt: float | None = None) -> TodaTrajectory:
    """Integrate the open chain long enough for ``J -> 0`` (default ``t = 50 / gap``)."""
    ev = s0.eigenvalues()
    gap = float(np.min(np.diff(ev)))
    if gap <= 0:
        raise InvalidArgumentError("degenerate spectrum has no Moser limit")
    if t_final is None:
        t_final = 50.0 / gap
    if dt is None:
        dt = min(1e-2, 0.05 / max(1.0, np.max(np.abs(ev))))
    return integrate_toda(s0, (0.0, t_final), dt, record_every=max(1, int(t_final / dt / 200)))


def with_boundary(s: TodaState, boundary: str) -> TodaState:
    return replace(s, J=s.J.copy(), h=s.h.copy(), boundary=boundary)
