"""KdV soliton potentials, supersymmetric partners and counterdiabatic operators.

Soliton potentials are written as ``u = -2 d^2/dx^2 ln tau`` with
``tau`` a sum of positive exponentials, so all partials are exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BoxTooSmallError, CapabilityError, DegenerateSolitonError, InvalidArgumentError
from .field import Grid1D, OperatorMatrix, Wavefunction, _derivative_matrix, apply_momentum
from .spacetime import FunctionField, LogTauField, SpaceTimeField, SuperpartnerField, TauFunction


@dataclass(frozen=True)
class SolitonParams:
    """Decay rates and amplitudes; two-soliton params are sorted so kappas[0] > kappas[1]."""

    kappas: tuple
    amps: tuple

    def __post_init__(self):
        kappas = tuple(float(k) for k in self.kappas)
        amps = tuple(float(a) for a in self.amps)
        if len(kappas) not in (1, 2) or len(amps) != len(kappas):
            raise InvalidArgumentError("need one or two (kappa, A) pairs")
        if any(not k > 0 for k in kappas) or any(not a > 0 for a in amps):
            raise InvalidArgumentError("kappas and amplitudes must be strictly positive")
        if len(kappas) == 2:
            if kappas[0] == kappas[1]:
                raise DegenerateSolitonError("kappa1 == kappa2 gives a degenerate double soliton")
            if kappas[0] < kappas[1]:
                kappas, amps = kappas[::-1], amps[::-1]
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "amps", amps)

    @property
    def n_solitons(self) -> int:
        return len(self.kappas)

    @property
    def ratio(self) -> float:
        """``(kappa1 - kappa2) / (kappa1 + kappa2)``."""
        k1, k2 = self.kappas
        return (k1 - k2) / (k1 + k2)

    @property
    def E0(self) -> float:
        return -self.kappas[0] ** 2

    @property
    def delta2(self) -> float:
        return 0.5 * np.log(self.ratio * self.amps[1])

    @property
    def bound_energies(self):
        return tuple(-k ** 2 for k in self.kappas)


DEMO_PARAMS = SolitonParams(kappas=(1.2, 1.0), amps=(3.0, 3.0))


def _soliton_tau(kappas, amps) -> TauFunction:
    """Tau function of the one- or two-soliton solution, speeds ``4 kappa^2``."""
    if len(kappas) == 1:
        (k,), (a,) = kappas, amps
        return TauFunction([0.0, 2 * k], [0.0, -8 * k ** 3], [0.0, np.log(a)])
    (k1, k2), (a1, a2) = kappas, amps
    r = (k1 - k2) / (k1 + k2)
    return TauFunction(
        [0.0, 2 * k1, 2 * k2, 2 * (k1 + k2)],
        [0.0, -8 * k1 ** 3, -8 * k2 ** 3, -8 * (k1 ** 3 + k2 ** 3)],
        [0.0, np.log(a1), np.log(a2), 2 * np.log(r) + np.log(a1) + np.log(a2)],
    )


def _sigma_tau(p: SolitonParams) -> TauFunction:
    k2, a2 = p.kappas[1], p.amps[1]
    return TauFunction([0.0, 2 * k2], [0.0, -8 * k2 ** 3], [0.0, np.log(p.ratio * a2)])


def single_soliton(kappa: float, amp: float = 1.0) -> LogTauField:
    """``u = -2 kappa^2 sech^2(kappa x - 4 kappa^3 t + ln(amp)/2)``."""
    if not kappa > 0:
        raise InvalidArgumentError(f"kappa must be positive, got {kappa}")
    return LogTauField([(-2.0, _soliton_tau((kappa,), (amp,)))], shift=2)


def double_soliton(p: SolitonParams) -> LogTauField:
    if p.n_solitons != 2:
        raise InvalidArgumentError("double_soliton needs two kappas")
    return LogTauField([(-2.0, _soliton_tau(p.kappas, p.amps))], shift=2)


def soliton(p: SolitonParams) -> LogTauField:
    if p.n_solitons == 1:
        return single_soliton(p.kappas[0], p.amps[0])
    return double_soliton(p)


def traveling_sech2(kappa: float, speed: float) -> LogTauField:
    """``-2 kappa^2 sech^2(kappa (x - speed t))`` for arbitrary speed."""
    tau = TauFunction([0.0, 2 * kappa], [0.0, -2 * kappa * speed], [0.0, 0.0])
    return LogTauField([(-2.0, tau)], shift=2)


def superpotential(p: SolitonParams) -> LogTauField:
    """W with ``u = W^2 - W_x + E0``, ``E0 = -kappa1^2``.

    ``W = -kappa1 + d/dx ln(tau / sigma)``, ``sigma = 1 + r A2 exp(2 eta2)``
    for two solitons and ``sigma = 1`` for one.
    """
    tau = _soliton_tau(p.kappas, p.amps)
    terms = [(1.0, tau)]
    if p.n_solitons == 2:
        terms.append((-1.0, _sigma_tau(p)))
    field = LogTauField(terms, shift=1, offset=-p.kappas[0])
    field.E0 = p.E0
    return field


def partner_potential(W: SpaceTimeField, E0: float) -> SuperpartnerField:
    """``W^2 + W_x + E0``."""
    return SuperpartnerField(W, E0, sign=+1)


def partner_closed_form(p: SolitonParams) -> LogTauField:
    """Closed form of ``W^2 + W_x + E0``: zero for one soliton, a shifted kappa2 soliton for two."""
    if p.n_solitons == 1:
        return LogTauField([], shift=0, offset=0.0)
    return LogTauField([(-2.0, _sigma_tau(p))], shift=2)


def kdv_residual(u: SpaceTimeField, x, t, a: float = -4.0, c1: float = 0.0):
    """``u_t + (a/4)(6 u u_x - u_xxx) + c1 u_x``; vanishes for KdV flows (``a=-4``: standard form)."""
    D, Dt = u.jet(x, t, 3)
    return Dt[0] + (a / 4) * (6 * D[0] * D[1] - D[3]) + c1 * D[1]


def kdv5_residual(u: SpaceTimeField, x, t):
    """``u_t - 10(u_xxx u + 2 u_xx u_x) + 30 u^2 u_x + u_xxxxx``."""
    if u.max_x_order < 5:
        raise CapabilityError("fifth-order residual needs x-partials up to order 5")
    D, Dt = u.jet(x, t, 5)
    return Dt[0] - 10 * (D[3] * D[0] + 2 * D[2] * D[1]) + 30 * D[0] ** 2 * D[1] + D[5]


def kdv5_soliton_speed(kappa: float, x: float = 0.3, bracket=(0.0, None)) -> float:
    """Speed at which a traveling sech^2 wave solves the fifth-order flow, by root search."""
    hi = bracket[1] if bracket[1] is not None else 100.0 * max(1.0, kappa) ** 4
    f = lambda c: float(kdv5_residual(traveling_sech2(kappa, c), x / kappa, 0.0))
    return brentq(f, bracket[0], hi, xtol=1e-14, rtol=1e-15)


def operator_apply_cd5(psi: Wavefunction, u_jet) -> Wavefunction:
    """``16 p^5 + 20 (p^3 u + u p^3) + 30 u p u + 5 (p u_xx + u_xx p)`` applied to psi.

    This is the fifth-order partner of ``p^2 + u`` for the flow checked by
    :func:`kdv5_residual`.  ``u_jet`` is ``(u, u_xx)`` sampled on psi's grid.
    """
    u, uxx = (np.asarray(a, dtype=float) for a in u_jet)
    g, v = psi.grid, psi.values
    p = lambda f, n=1: apply_momentum(f, g, n)
    out = (16 * p(v, 5) + 20 * (p(u * v, 3) + u * p(v, 3)) + 30 * u * p(u * v)
           + 5 * (p(uxx * v) + uxx * p(v)))
    return Wavefunction(g, out)


def cd5_matrix(u_samples, uxx_samples, grid: Grid1D) -> OperatorMatrix:
    u = np.diag(np.asarray(u_samples, dtype=float))
    uxx = np.diag(np.asarray(uxx_samples, dtype=float))
    p1 = -1j * _derivative_matrix(grid, 1)
    p3 = 1j * _derivative_matrix(grid, 3)
    p5 = -1j * _derivative_matrix(grid, 5)
    h = 16 * p5 + 20 * (p3 @ u + u @ p3) + 30 * u @ p1 @ u + 5 * (p1 @ uxx + uxx @ p1)
    return OperatorMatrix(0.5 * (h + h.conj().T), hermitian=True, _checked=True)


def adiabatic_ground_state(p: SolitonParams, grid: Grid1D, t: float, tail_tol: float = 1e-8) -> Wavefunction:
    """Normalized zero mode ``psi ~ exp(kappa1 x) sigma / tau`` (``sech`` for one soliton)."""
    tau = _soliton_tau(p.kappas, p.amps)
    x = grid.x
    logpsi = p.kappas[0] * x - tau.log(x, t)
    if p.n_solitons == 2:
        logpsi = logpsi + _sigma_tau(p).log(x, t)
    logpsi = logpsi - np.max(logpsi)
    psi = np.exp(logpsi)
    norm2 = np.sum(psi ** 2) * grid.spacing
    # |psi|^2 decays like exp(-2 kappa1 |x|) outside the wells
    tail = (psi[0] ** 2 + psi[-1] ** 2) / (2 * p.kappas[0]) / norm2
    if tail > tail_tol:
        raise BoxTooSmallError(f"estimated probability outside the box {tail:.2e} > {tail_tol:.0e}")
    return Wavefunction(grid, psi / np.sqrt(norm2))


def gauge_phase(p: SolitonParams, convention: str = "shifted"):
    """Antiderivative ``Lambda(x, t)`` of the vector potential ``A = u_partner - 2 kappa1^2``.

    The gauge-frame state is ``exp(-i Lambda) psi``.  ``convention`` selects
    the partner offset: ``"shifted"`` uses ``W^2 + W_x + E0`` (vanishing at
    ``x -> -inf``), ``"unshifted"`` uses ``W^2 + W_x``.
    """
    k1, k2 = p.kappas
    offset = _partner_offset(p, convention)
    sigma = _sigma_tau(p)

    def phase(x, t):
        # -2 d^2/dx^2 ln sigma integrates to -2 d/dx ln sigma, which vanishes at x -> -inf
        return (offset - 2 * k1 ** 2) * x - 2 * sigma.log_jet(x, t, 1, with_t=False)[0][1]

    return phase


def _partner_offset(p: SolitonParams, convention: str) -> float:
    if convention == "shifted":
        return 0.0
    if convention == "unshifted":
        return p.kappas[0] ** 2
    raise InvalidArgumentError(f"unknown V_cd convention {convention!r}")


def cd_potential_vcd(p: SolitonParams, convention: str = "shifted", keep_constants: bool = True) -> FunctionField:
    """Scalar counterdiabatic potential of the gauge-transformed double soliton.

    With ``s`` the partner potential in the chosen convention,
    ``V_cd = -(s - 2 kappa1^2)^2 - 4 kappa2^2 s``, the last term standing for
    ``d/dt int s dx`` up to a constant.  ``keep_constants=False`` subtracts
    the far-field value, which for ``"shifted"`` leaves
    ``-s^2 + 4 (kappa1^2 - kappa2^2) s``.
    """
    if p.n_solitons != 2:
        raise InvalidArgumentError("V_cd is defined for the double soliton")
    k1, k2 = p.kappas
    offset = _partner_offset(p, convention)
    sigma = _sigma_tau(p)
    far = -(offset - 2 * k1 ** 2) ** 2 - 4 * k2 ** 2 * offset

    def vcd(x, t):
        s = offset - 2.0 * sigma.log_jet(x, t, 2, with_t=False)[0][2]
        v = -(s - 2 * k1 ** 2) ** 2 - 4 * k2 ** 2 * s
        return v if keep_constants else v - far

    return FunctionField(vcd)
