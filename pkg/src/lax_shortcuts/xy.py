"""Isotropic XY chain driven by Toda couplings, in fixed-magnetization sectors.

With all spins down as the vacuum, a flipped spin is a spinless fermion
and the chain is a free hopping model:

    H_ad = sum_n J_n (s+_n s-_{n+1} + h.c.) + sum_n h_n (1 + sz_n) / 2
    H_cd = sum_n i J_n (s+_n s-_{n+1} - h.c.)

The single-flip block of ``H_ad`` is ``tridiag(J, h, J)``, equal to the
Toda ``L``, and that of ``H_cd`` is ``i M``.  Two flips live in the
antisymmetrized two-fermion space.  Additive constants are dropped
throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.linalg import eigh, eigvals_banded, expm

from .errors import DegenerateSpectrumError, InvalidArgumentError, StepSizeError
from .field import OperatorMatrix
from .toda import TodaState, toda_rhs

SECTORS = ("single_flip", "double_flip")
MAX_FOCK_SITES = 14


@dataclass
class SectorMatrixSet:
    sector: str
    H_ad: OperatorMatrix
    H_cd: OperatorMatrix
    basis_labels: list

    @property
    def dim(self) -> int:
        return self.H_ad.dim


def one_body(s: TodaState):
    """Single-flip ``H_ad`` and ``H_cd`` as dense arrays (the last ghost bond is dropped)."""
    b = s.bonds
    had = np.diag(s.h) + np.diag(b, 1) + np.diag(b, -1)
    hcd = 1j * (np.diag(b, 1) - np.diag(b, -1))
    return had, hcd


def pair_labels(n_sites: int):
    return [(m, n) for m in range(n_sites) for n in range(m + 1, n_sites)]


def _pair_index(n_sites: int):
    idx = -np.ones((n_sites, n_sites), dtype=int)
    m, n = np.triu_indices(n_sites, 1)
    idx[m, n] = np.arange(m.size)
    return idx


def two_particle_lift(h1) -> sparse.csr_matrix:
    """Antisymmetric two-fermion lift of a one-body matrix on ordered pairs ``m < n``.

    ``h c+_m c+_n |0> = sum_a h_am c+_a c+_n |0> + h_an c+_m c+_a |0>``,
    with ``c+_a c+_b = -c+_b c+_a`` used to reorder.
    """
    h1 = np.asarray(h1)
    N = h1.shape[0]
    idx = _pair_index(N)
    pm, pn = np.triu_indices(N, 1)
    rows, cols, vals = [], [], []
    for a, b in zip(*np.nonzero(h1)):
        amp = h1[a, b]
        # pairs containing b as either member; the other member is "o"
        for sel, other in ((pm == b, pn), (pn == b, pm)):
            col = np.nonzero(sel)[0]
            o = other[col]
            # replace b by a; sign from ordering (a, o) relative to (b, o)
            keep = o != a
            col, o = col[keep], o[keep]
            b_first = b < o
            a_first = a < o
            sign = np.where(b_first == a_first, 1.0, -1.0)
            lo, hi = np.minimum(a, o), np.maximum(a, o)
            rows.append(idx[lo, hi])
            cols.append(col)
            vals.append(sign * amp)
    dim = pm.size
    if not rows:
        return sparse.csr_matrix((dim, dim), dtype=h1.dtype)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(dim, dim))


def build_sector(s: TodaState, sector: str = "single_flip", dense: bool | None = None) -> SectorMatrixSet:
    """Sector matrices of the adiabatic and counterdiabatic Hamiltonians.

    A truncated infinite chain is treated as the finite open chain on its
    sites.  Double-flip matrices are sparse unless ``dense`` is requested
    (default: dense when the sector dimension is at most 2000).
    """
    if sector not in SECTORS:
        raise InvalidArgumentError(f"unsupported sector {sector!r}; expected one of {SECTORS}")
    had, hcd = one_body(s)
    N = s.n_sites
    if sector == "single_flip":
        return SectorMatrixSet(sector, OperatorMatrix(had, hermitian=True, _checked=True),
                               OperatorMatrix(hcd, hermitian=True, _checked=True), list(range(N)))
    H2 = two_particle_lift(had)
    C2 = two_particle_lift(hcd)
    if dense is None:
        dense = H2.shape[0] <= 2000
    if dense:
        H2, C2 = H2.toarray(), C2.toarray()
    return SectorMatrixSet(sector, OperatorMatrix(H2, hermitian=True, _checked=True),
                           OperatorMatrix(C2, hermitian=True, _checked=True), pair_labels(N))


def sector_eigenvalues(s: TodaState, sector: str = "single_flip") -> np.ndarray:
    """Sorted eigenvalues of the adiabatic sector Hamiltonian.

    The double-flip matrix is banded (bandwidth below N) in pair order, so
    a banded solver handles N = 100 (dimension 4950) in a few seconds.
    """
    if sector == "single_flip":
        return s.eigenvalues()
    H2 = build_sector(s, sector, dense=False).H_ad.entries
    dim = H2.shape[0]
    if dim <= 500:
        return np.linalg.eigvalsh(H2.toarray().real)
    # the band must be narrower than the matrix
    bw = min(s.n_sites, dim - 1)
    band = np.zeros((bw + 1, dim))
    coo = sparse.triu(H2).tocoo()
    if np.any(coo.col - coo.row > bw):
        raise InvalidArgumentError("double-flip matrix wider than expected band")
    band[bw + coo.row - coo.col, coo.col] = coo.data.real
    return np.sort(eigvals_banded(band, lower=False))


def find_bands(eigenvalues, gap: float = 0.25):
    """Split a sorted spectrum at spacings wider than ``gap``; returns ``(low, high, count)`` per band."""
    ev = np.sort(np.asarray(eigenvalues))
    cuts = np.nonzero(np.diff(ev) > gap)[0] + 1
    return [(float(g[0]), float(g[-1]), int(g.size)) for g in np.split(ev, cuts)]


@dataclass
class SpectrumFlow:
    times: np.ndarray
    eigenvalues: np.ndarray

    def drift(self) -> float:
        return float(np.max(np.abs(self.eigenvalues - self.eigenvalues[0])))

    def bands(self, i: int = 0, gap: float = 0.25):
        return find_bands(self.eigenvalues[i], gap)

    def band_widths(self, i: int = 0, gap: float = 0.25):
        """Widths sorted by band population (largest first)."""
        b = sorted(self.bands(i, gap), key=lambda x: -x[2])
        return [hi - lo for lo, hi, _ in b]


def spectrum_flow(times, schedule: Callable[[float], TodaState], sector: str = "single_flip") -> SpectrumFlow:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise InvalidArgumentError("spectrum_flow needs at least two times")
    return SpectrumFlow(times, np.array([sector_eigenvalues(schedule(t), sector) for t in times]))


def bound_state_index(eigenvalues, continuum=(-1.0, 1.0)) -> int:
    """Index of the eigenvalue farthest outside the continuum band."""
    ev = np.asarray(eigenvalues)
    dist = np.maximum(ev - continuum[1], continuum[0] - ev)
    return int(np.argmax(dist))


@dataclass
class SectorEvolution:
    times: np.ndarray
    occupation: np.ndarray
    norm: np.ndarray
    final_state: np.ndarray


def evolve_sector(psi0, schedule: Callable[[float], TodaState], with_cd: bool, t_span, dt: float,
                  sector: str = "single_flip", target: Callable | None = None,
                  time_scale: float = 1.0) -> SectorEvolution:
    """Fourth-order Magnus propagation inside one sector.

    ``target(H_ad) -> vector`` picks the instantaneous eigenvector whose
    occupation is recorded (default: the bound state outside [-1, 1]).
    ``time_scale`` compresses the schedule, running ``schedule(time_scale * t)``;
    the counterdiabatic term scales with it as the time derivative does.
    """
    psi = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise InvalidArgumentError("psi0 must be normalized")
    t0, t1 = map(float, t_span)
    n_steps = max(1, int(round((t1 - t0) / dt)))
    h = (t1 - t0) / n_steps
    if target is None:
        def target(H):
            vals, vecs = eigh(H)
            return vecs[:, bound_state_index(vals)]

    def hamiltonian(t):
        sec = build_sector(schedule(time_scale * t), sector, dense=True)
        H = sec.H_ad.entries.astype(complex)
        if with_cd:
            H = H + time_scale * sec.H_cd.entries
        return H, sec.H_ad.entries

    radius = np.max(np.abs(np.linalg.eigvalsh(hamiltonian(t0)[0])))
    if radius * h > 1.0:
        raise StepSizeError(f"dt * spectral radius = {radius * h:.2f} > 1; reduce dt below {1.0 / radius:.2e}")
    c = np.sqrt(3) / 6
    times, occ, norms = [t0], [], []
    occ.append(abs(np.vdot(target(hamiltonian(t0)[1]), psi)) ** 2)
    norms.append(np.linalg.norm(psi))
    for i in range(n_steps):
        t = t0 + i * h
        H1 = hamiltonian(t + (0.5 - c) * h)[0]
        H2 = hamiltonian(t + (0.5 + c) * h)[0]
        omega = -0.5j * h * (H1 + H2) - (np.sqrt(3) / 12) * h ** 2 * (H2 @ H1 - H1 @ H2)
        psi = expm(omega) @ psi
        tn = t0 + (i + 1) * h
        times.append(tn)
        occ.append(abs(np.vdot(target(hamiltonian(tn)[1]), psi)) ** 2)
        norms.append(np.linalg.norm(psi))
        if abs(norms[-1] - 1) > 1e-3:
            raise StepSizeError(f"norm drifted to {norms[-1]:.6f} at t={tn:.4f}; reduce dt")
    return SectorEvolution(np.array(times), np.array(occ), np.array(norms), psi)


def spectral_cd_oracle(s: TodaState, ds_dt: TodaState | None = None, tol: float = 1e-9) -> OperatorMatrix:
    """``i sum_{m != n} |m><m| dH/dt |n><n| / (E_n - E_m)`` in the single-flip sector.

    ``ds_dt`` defaults to the Toda velocity of ``s``.  Degenerate pairs
    (``|E_m - E_n| < tol``) contribute nothing when their coupling vanishes
    and raise otherwise.
    """
    if ds_dt is None:
        ds_dt = toda_rhs(s)
    H, _ = one_body(s)
    dH, _ = one_body(TodaState(ds_dt.J, ds_dt.h, "infinite_truncated"))
    E, V = eigh(H)
    dHe = V.conj().T @ dH @ V
    diff = E[None, :] - E[:, None]  # E_n - E_m at [m, n]
    degenerate = np.abs(diff) < tol
    np.fill_diagonal(degenerate, False)
    if np.any(np.abs(dHe[degenerate]) > tol):
        raise DegenerateSpectrumError("degenerate levels are coupled by dH/dt")
    with np.errstate(divide="ignore", invalid="ignore"):
        coeff = np.where(np.abs(diff) < tol, 0.0, dHe / np.where(np.abs(diff) < tol, 1.0, diff))
    hcd = 1j * V @ coeff @ V.conj().T
    return OperatorMatrix(0.5 * (hcd + hcd.conj().T), hermitian=True, _checked=True)


def offdiagonal_in_eigenbasis(A, H) -> np.ndarray:
    """``V^H A V`` with its diagonal zeroed, ``V`` the eigenvectors of ``H``."""
    _, V = eigh(np.asarray(H))
    out = V.conj().T @ np.asarray(A) @ V
    np.fill_diagonal(out, 0.0)
    return out


def invariant_residual_sector(s: TodaState, ds_dt: TodaState | None = None, h_cd=None) -> float:
    """``||i dH_ad/dt - [H_cd, H_ad]||_F / ||H_ad||_F`` in the single-flip sector."""
    if ds_dt is None:
        ds_dt = toda_rhs(s)
    H, hcd = one_body(s)
    if h_cd is not None:
        hcd = np.asarray(getattr(h_cd, "entries", h_cd))
    dH, _ = one_body(TodaState(ds_dt.J, ds_dt.h, "infinite_truncated"))
    return float(np.linalg.norm(1j * dH - (hcd @ H - H @ hcd)) / np.linalg.norm(H))


def theta_gauge(n_sites: int, step: float = -np.pi / 4) -> np.ndarray:
    """Single-flip diagonal of ``U = exp(-(i/2) sum theta_n sz_n)`` with ``theta_{n+1} - theta_n = step``.

    Up to a global phase ``U`` acts on a flip at site n as ``exp(-i theta_n)``.
    """
    return np.exp(-1j * step * np.arange(n_sites))


def gauge_transform(H, phases) -> np.ndarray:
    """``U^H H U`` for diagonal ``U``."""
    return np.conj(phases)[:, None] * np.asarray(H) * phases[None, :]


def inverse_engineered_hamiltonian(s: TodaState) -> np.ndarray:
    """Real hopping Hamiltonian with couplings ``sqrt(2) J_n`` and fields ``h_n``.

    Its gauge transform by :func:`theta_gauge` is ``H_ad + H_cd``.
    """
    b = np.sqrt(2) * s.bonds
    return np.diag(s.h) + np.diag(b, 1) + np.diag(b, -1)


def _site_op(op, n, N):
    return sparse.kron(sparse.kron(sparse.identity(2 ** n, format="csr"), op),
                       sparse.identity(2 ** (N - n - 1), format="csr"), format="csr")


def spin_hamiltonians(s: TodaState):
    """Full ``2^N`` spin-space ``H_ad`` and ``H_cd`` (sparse); small chains only.

    Basis states are products with bit 1 meaning a flipped (up) spin.
    """
    N = s.n_sites
    if N > MAX_FOCK_SITES:
        raise InvalidArgumentError(f"full spin space limited to N <= {MAX_FOCK_SITES}, got {N}")
    sp = sparse.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))  # |1><0|, raises the flip count
    sm = sp.T.tocsr()
    num = sparse.csr_matrix(np.diag([0.0, 1.0]))
    dim = 2 ** N
    had = sparse.csr_matrix((dim, dim))
    hcd = sparse.csr_matrix((dim, dim), dtype=complex)
    for n in range(N):
        had = had + s.h[n] * _site_op(num, n, N)
    for n, J in enumerate(s.bonds):
        hop = _site_op(sp, n, N) @ _site_op(sm, n + 1, N)
        had = had + J * (hop + hop.T)
        hcd = hcd + 1j * J * (hop - hop.T)
    return had.tocsr(), hcd.tocsr()


def restrict_to_sector(op, n_sites: int, sector: str = "single_flip") -> np.ndarray:
    """Block of a spin-space operator on the one- or two-flip states, in sector basis order."""
    if sector == "single_flip":
        states = [1 << (n_sites - 1 - n) for n in range(n_sites)]
    elif sector == "double_flip":
        states = [(1 << (n_sites - 1 - m)) | (1 << (n_sites - 1 - n)) for m, n in pair_labels(n_sites)]
    else:
        raise InvalidArgumentError(f"unsupported sector {sector!r}")
    op = sparse.csr_matrix(op)
    return op[states][:, states].toarray()
