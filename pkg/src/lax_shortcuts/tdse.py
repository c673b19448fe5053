"""Time-dependent Schroedinger propagation with counterdiabatic terms.

``i d psi/dt = H(t) psi`` with ``H = p^2 + u(x, t) + H_cd``.  Scalar
Hamiltonians go through Strang splitting; anything with derivative terms
is integrated by classical RK4 on the spectrally applied operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh

from .errors import InvalidArgumentError, StepSizeError
from .field import Grid1D, Wavefunction, apply_momentum, hamiltonian_matrix
from .kdv import SolitonParams, adiabatic_ground_state, cd_potential_vcd, double_soliton, gauge_phase, partner_closed_form
from .spacetime import SpaceTimeField

CD_MODES = ("none", "scalar_vcd", "operator_cd3", "operator_cd5", "linear_p")


@dataclass
class DrivingSpec:
    """What to propagate.

    ``cd_field`` is the scalar potential for ``scalar_vcd`` and the
    coefficient ``f`` of ``H_cd = p f + f p`` for ``linear_p`` (a field or a
    number).  ``a`` and ``c1`` parametrize ``operator_cd3``.
    """

    base_potential: SpaceTimeField
    cd_mode: str = "none"
    cd_field: object = None
    gauge_frame: bool = False
    a: float = -4.0
    c1: float = 0.0
    two_soliton_base: bool = False

    def __post_init__(self):
        if self.cd_mode not in CD_MODES:
            raise InvalidArgumentError(f"unknown cd_mode {self.cd_mode!r}; expected one of {CD_MODES}")
        if self.cd_mode == "scalar_vcd":
            if not self.two_soliton_base:
                raise InvalidArgumentError("scalar_vcd requires a two-soliton base potential")
            if self.cd_field is None:
                raise InvalidArgumentError("scalar_vcd needs the V_cd field")
        if self.cd_mode == "linear_p" and self.cd_field is None:
            raise InvalidArgumentError("linear_p needs a coefficient field or constant")
        needed = {"operator_cd3": 1, "operator_cd5": 2}.get(self.cd_mode, 0)
        if needed > self.base_potential.max_x_order:
            raise InvalidArgumentError(
                f"{self.cd_mode} needs x-partials up to order {needed} of the base potential")

    @property
    def scalar_only(self) -> bool:
        return self.cd_mode in ("none", "scalar_vcd")

    def potential(self, x, t):
        v = self.base_potential(x, t)
        if self.cd_mode == "scalar_vcd":
            v = v + self.cd_field(x, t)
        return v


@dataclass
class PropagationResult:
    times: np.ndarray
    fidelity_series: np.ndarray
    norm_series: np.ndarray
    final_state: Wavefunction
    snapshots: dict = field(default_factory=dict)

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm_series - 1.0)))


def fidelity(psi: Wavefunction, phi: Wavefunction) -> float:
    """``|<psi|phi>|`` with the grid measure."""
    if psi.grid != phi.grid:
        raise InvalidArgumentError("fidelity needs both states on the same grid")
    # clipped so roundoff on normalized states cannot push it past 1
    return float(min(1.0, abs(np.vdot(psi.values, phi.values)) * psi.grid.spacing))


def _operator_arrays(spec: DrivingSpec, grid: Grid1D, t: float) -> dict:
    """Samples of every x-dependent coefficient of ``H(t)``."""
    x = grid.x
    arrays = {"v": spec.potential(x, t)}
    mode = spec.cd_mode
    if mode == "linear_p":
        f = spec.cd_field
        arrays["f"] = f(x, t) if isinstance(f, SpaceTimeField) else np.full(x.shape, float(f))
    elif mode == "operator_cd3":
        arrays["u"] = spec.base_potential(x, t)
    elif mode == "operator_cd5":
        D, _ = spec.base_potential.jet(x, t, 2)
        arrays["u"], arrays["uxx"] = D[0], D[2]
    return arrays


def _apply(spec: DrivingSpec, arrays: dict, values: np.ndarray, grid: Grid1D) -> np.ndarray:
    ik = 1j * grid.k
    ik_odd = ik.copy()
    if grid.n_points % 2 == 0:
        ik_odd[grid.n_points // 2] = 0.0
    vh = np.fft.fft(values)
    p = lambda f: -np.fft.ifft(ik_odd * np.fft.fft(f)) * 1j
    out = np.fft.ifft(grid.k ** 2 * vh) + arrays["v"] * values
    mode = spec.cd_mode
    if mode == "linear_p":
        f = arrays["f"]
        pv = -1j * np.fft.ifft(ik_odd * vh)
        out += p(f * values) + f * pv
    elif mode == "operator_cd3":
        u = arrays["u"]
        pv = -1j * np.fft.ifft(ik_odd * vh)
        p3v = 1j * np.fft.ifft(ik_odd ** 3 * vh)
        out += spec.a * (p3v + 0.75 * (p(u * values) + u * pv)) + spec.c1 * pv
    elif mode == "operator_cd5":
        u, uxx = arrays["u"], arrays["uxx"]
        pv = -1j * np.fft.ifft(ik_odd * vh)
        p3 = lambda fh: 1j * np.fft.ifft(ik_odd ** 3 * fh)
        p3v = p3(vh)
        p5v = -1j * np.fft.ifft(ik_odd ** 5 * vh)
        out += (16 * p5v + 20 * (p3(np.fft.fft(u * values)) + u * p3v) + 30 * u * p(u * values)
                + 5 * (p(uxx * values) + uxx * pv))
    return out


def apply_hamiltonian(spec: DrivingSpec, values: np.ndarray, grid: Grid1D, t: float) -> np.ndarray:
    """``H(t) psi`` with every derivative applied spectrally."""
    return _apply(spec, _operator_arrays(spec, grid, t), np.asarray(values, dtype=complex), grid)


def _rk4_bound(spec: DrivingSpec, grid: Grid1D, t: float) -> float:
    """Crude spectral-radius bound used to reject unstable RK4 steps."""
    k = grid.k_nyquist
    x = grid.x
    bound = k ** 2 + np.max(np.abs(spec.potential(x, t)))
    if spec.cd_mode == "linear_p":
        f = spec.cd_field
        fmax = np.max(np.abs(f(x, t))) if isinstance(f, SpaceTimeField) else abs(f)
        bound += 2 * fmax * k
    elif spec.cd_mode == "operator_cd3":
        umax = np.max(np.abs(spec.base_potential(x, t)))
        bound += abs(spec.a) * (k ** 3 + 1.5 * umax * k) + abs(spec.c1) * k
    elif spec.cd_mode == "operator_cd5":
        D, _ = spec.base_potential.jet(x, t, 2)
        um, uxxm = np.max(np.abs(D[0])), np.max(np.abs(D[2]))
        bound += 16 * k ** 5 + 40 * um * k ** 3 + 30 * um ** 2 * k + 10 * uxxm * k
    return bound


def propagate(psi0: Wavefunction, spec: DrivingSpec, t0: float, t1: float, dt: float,
              reference: Optional[Callable[[float], Wavefunction]] = None,
              record_every: float | None = None, snapshot_times=(),
              max_norm_drift: float = 1e-3) -> PropagationResult:
    """Solve ``i d psi/dt = H(t) psi`` from ``t0`` to ``t1``.

    ``reference(t)`` supplies the state the fidelity is measured against.
    Samples are recorded every ``record_every`` time units (default: every
    step) and at ``snapshot_times``, where copies of the state are kept.
    """
    if not dt > 0 or not t1 > t0:
        raise InvalidArgumentError("need dt > 0 and t1 > t0")
    grid = psi0.grid
    n_steps = int(round((t1 - t0) / dt))
    dt = (t1 - t0) / n_steps
    stride = max(1, int(round(record_every / dt))) if record_every else 1
    snap_steps = {int(round((ts - t0) / dt)): ts for ts in snapshot_times}

    x = grid.x
    k2 = grid.k ** 2
    psi = psi0.values.astype(complex).copy()
    if dt * grid.k_nyquist ** 2 >= 0.5:
        raise StepSizeError(f"dt * k_max^2 = {dt * grid.k_nyquist ** 2:.3f} >= 0.5; "
                            f"reduce dt below {0.5 / grid.k_nyquist ** 2:.2e}")
    if not spec.scalar_only:
        rate = _rk4_bound(spec, grid, t0)
        if rate * dt > 2.5:
            raise StepSizeError(f"RK4 step too large: dt * spectral bound = {rate * dt:.2f} > 2.5; "
                                f"reduce dt below {2.5 / rate:.2e}")
    half_kin = np.exp(-0.5j * k2 * dt)

    times, fids, norms = [], [], []
    snapshots = {}

    def record(step, values):
        t = t0 + step * dt
        wf = Wavefunction(grid, values)
        n = wf.norm()
        times.append(t)
        norms.append(n)
        fids.append(fidelity(reference(t), wf) if reference is not None else np.nan)
        if abs(n - 1.0) > max_norm_drift:
            raise StepSizeError(f"norm drifted to {n:.6f} at t={t:.4f}; reduce dt (now {dt:.2e})")
        if step in snap_steps:
            snapshots[snap_steps[step]] = wf

    record(0, psi)
    full_kin = half_kin ** 2
    pending = False  # a kinetic half step still owed before psi is looked at
    for step in range(1, n_steps + 1):
        t = t0 + (step - 1) * dt
        if spec.scalar_only:
            psi = np.fft.ifft((full_kin if pending else half_kin) * np.fft.fft(psi))
            psi *= np.exp(-1j * dt * spec.potential(x, t + 0.5 * dt))
            pending = True
        else:
            psi = _rk4_step(spec, psi, grid, t, dt)
        if step % stride == 0 or step == n_steps or step in snap_steps:
            if pending:
                psi = np.fft.ifft(half_kin * np.fft.fft(psi))
                pending = False
            record(step, psi)
    return PropagationResult(np.array(times), np.array(fids), np.array(norms),
                             Wavefunction(grid, psi), snapshots)


def _rk4_step(spec, psi, grid, t, dt):
    a0, am, a1 = (_operator_arrays(spec, grid, tt) for tt in (t, t + 0.5 * dt, t + dt))
    f = lambda arr, v: -1j * _apply(spec, arr, v, grid)
    k1 = f(a0, psi)
    k2 = f(am, psi + 0.5 * dt * k1)
    k3 = f(am, psi + 0.5 * dt * k2)
    k4 = f(a1, psi + dt * k3)
    return psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def instantaneous_eigenstates(potential: SpaceTimeField, grid: Grid1D, t: float, n_levels: int = 1):
    """Lowest eigenpairs of ``p^2 + u(x, t)``; vectors normalized with the grid measure."""
    h = hamiltonian_matrix(potential.sample(grid, t), grid).entries
    vals, vecs = eigh(h, subset_by_index=[0, n_levels - 1])
    return vals, vecs / np.sqrt(grid.spacing)


def reference_adiabatic_state(spec: DrivingSpec, grid: Grid1D, t: float, level: int = 0,
                              previous: Wavefunction | None = None) -> Wavefunction:
    """Instantaneous bound eigenstate ``level`` of the base Hamiltonian.

    The phase is fixed by maximizing ``Re <previous|psi>``; without a
    previous state the largest-magnitude sample is made real positive.
    """
    u = spec.base_potential
    vals, vecs = instantaneous_eigenstates(u, grid, t, level + 1)
    samples = u.sample(grid, t)
    # the flat k = 0 continuum state sits at the threshold up to roundoff
    threshold = min(samples[0], samples[-1]) - 1e-8
    n_bound = int(np.sum(vals < threshold))
    if level >= n_bound:
        raise InvalidArgumentError(f"level {level} requested but only {n_bound} bound states at t={t}")
    v = vecs[:, level].astype(complex)
    if previous is None:
        i = np.argmax(np.abs(v))
        v = v * np.conj(v[i]) / abs(v[i])
    else:
        ov = np.vdot(previous.values, v)
        if abs(ov) > 0:
            v = v * np.conj(ov) / abs(ov)
    return Wavefunction(grid, v)


class AdiabaticTracker:
    """Follows one instantaneous eigenstate through time with phase continuity."""

    def __init__(self, spec: DrivingSpec, grid: Grid1D, level: int = 0):
        self.spec, self.grid, self.level = spec, grid, level
        self.previous = None

    def __call__(self, t: float) -> Wavefunction:
        self.previous = reference_adiabatic_state(self.spec, self.grid, t, self.level, self.previous)
        return self.previous


def gauge_frame_reference(p: SolitonParams, grid: Grid1D, convention: str = "shifted"):
    """``t -> exp(-i Lambda) psi_ad(t)``, the exact state of the gauge-frame problem."""
    phase = gauge_phase(p, convention)

    def ref(t):
        psi = adiabatic_ground_state(p, grid, t)
        return Wavefunction(grid, np.exp(-1j * phase(grid.x, t)) * psi.values)

    return ref


def operator_frame_coefficient(p: SolitonParams) -> SpaceTimeField:
    """Coefficient ``f = 2 kappa1^2 - u_partner`` so that ``p f + f p`` is the ground-state CD term."""
    from .spacetime import LogTauField
    partner = partner_closed_form(p)
    return LogTauField([(-c, tau) for c, tau in partner.terms], shift=partner.shift,
                       offset=2 * p.kappas[0] ** 2 - partner.offset)


@dataclass
class TransportRun:
    times: np.ndarray
    fidelity_with_cd: np.ndarray
    fidelity_without_cd: np.ndarray
    norm_with_cd: np.ndarray
    norm_without_cd: np.ndarray
    snapshots_with_cd: dict
    snapshots_without_cd: dict


def double_soliton_transport(p: SolitonParams, grid: Grid1D, t0: float = -2.0, t1: float = 2.0,
                             dt: float = 1e-4, convention: str = "shifted", record_every: float = 0.01,
                             snapshot_times=()) -> TransportRun:
    """Ground-state transport in the double soliton with and without the scalar V_cd.

    The with-CD run works in the gauge frame and is compared against the
    gauge-transformed adiabatic state; the bare run starts from the
    adiabatic ground state and is compared against it.
    """
    u = double_soliton(p)
    vcd = cd_potential_vcd(p, convention=convention)
    with_cd = DrivingSpec(u, "scalar_vcd", cd_field=vcd, gauge_frame=True, two_soliton_base=True)
    bare = DrivingSpec(u, "none")
    ref_cd = gauge_frame_reference(p, grid, convention)
    ref_bare = lambda t: adiabatic_ground_state(p, grid, t)
    r_cd = propagate(ref_cd(t0), with_cd, t0, t1, dt, reference=ref_cd,
                     record_every=record_every, snapshot_times=snapshot_times)
    r_bare = propagate(ref_bare(t0), bare, t0, t1, dt, reference=ref_bare,
                       record_every=record_every, snapshot_times=snapshot_times)
    return TransportRun(r_cd.times, r_cd.fidelity_series, r_bare.fidelity_series,
                        r_cd.norm_series, r_bare.norm_series, r_cd.snapshots, r_bare.snapshots)
