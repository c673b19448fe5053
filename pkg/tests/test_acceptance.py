"""Acceptance gate: one test per criterion, at the stated tolerances and runtime budgets.

Run with ``pytest tests/test_acceptance.py`` (a per-criterion PASS/FAIL block is
printed in the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import time
import warnings

import numpy as np
import pytest

from lax_shortcuts import extensions as ext
from lax_shortcuts import kdv, tdse, toda, xy
from lax_shortcuts.field import Grid1D, spectral_derivative
from lax_shortcuts.scenarios import (bound_energy_flow, bound_state_start, cd3_residuals, cd5_residual,
                                     gauge_consistency, lift_error, moser_errors, oracle_errors)
from lax_shortcuts.spacetime import GaussianBump, PolynomialWell, SumField, SuperpartnerField

FIG1 = kdv.DEMO_PARAMS


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def test_c01_double_soliton_bound_energies(acceptance):
    grid = Grid1D(-40.0, 40.0, 1024)
    times = np.linspace(-3.0, 3.0, 7)
    E, dt = _timed(lambda: bound_energy_flow(FIG1, grid, times))
    e0, e1 = E[3]
    drift = np.max(np.abs(E - E[3]))
    ok = abs(e0 + 1.44) <= 1e-3 and abs(e1 + 1.0) <= 1e-3 and drift < 1e-3 and dt < 10
    assert acceptance(1, "double-soliton bound energies", ok,
                      f"E0={e0:.6f} E1={e1:.6f} drift={drift:.1e} ({dt:.1f}s)")


def test_c02_kdv_residuals(acceptance):
    def run():
        rng = np.random.default_rng(0)
        X, T = rng.uniform(-20, 20, 10_000), rng.uniform(-3, 3, 10_000)
        single, double = kdv.single_soliton(1.2, 3.0), kdv.double_soliton(FIG1)
        r = max(np.max(np.abs(kdv.kdv_residual(f, X, T))) for f in (single, double))
        bump = GaussianBump(0.01)
        ctrl = min(np.max(np.abs(kdv.kdv_residual(SumField(f, bump), X, T))) for f in (single, double))
        return r, ctrl
    (r, ctrl), dt = _timed(run)
    ok = r < 1e-8 and ctrl > 1e-4 and dt < 5
    assert acceptance(2, "KdV residuals", ok, f"max residual={r:.1e} perturbed={ctrl:.1e} ({dt:.1f}s)")


def test_c03_invariant_certification(acceptance):
    grid = Grid1D(-20.0, 20.0, 512)
    r_single, wrong_single = cd3_residuals(kdv.single_soliton(1.0), grid, 0.3, 1e-4)
    r_double, wrong_double = cd3_residuals(kdv.double_soliton(FIG1), grid, 0.3, 1e-4)
    speed = kdv.kdv5_soliton_speed(1.0)
    r5 = cd5_residual(1.0, grid, 0.3, 1e-4)
    r3 = max(r_single, r_double)
    wrong = min(wrong_single, wrong_double)
    ok = r3 < 1e-6 and wrong > 1e-2 and abs(speed - 16.0) <= 1e-6 and r5 < 1e-5
    assert acceptance(3, "invariant/Lax certification", ok,
                      f"cd3={r3:.1e} wrong-a={wrong:.1e} c5={speed:.12f} cd5={r5:.1e}")


def test_c04_fig1_transport(acceptance):
    grid = Grid1D(-40.0, 40.0, 1024)

    def run():
        r = tdse.double_soliton_transport(FIG1, grid, -2.0, 2.0, dt=1e-4, record_every=0.01)
        return r, gauge_consistency(FIG1, grid, -2.0, 2.0)
    (run_, gauge), dt = _timed(run)
    fmin = np.min(run_.fidelity_with_cd)
    gap = run_.fidelity_with_cd[-1] - run_.fidelity_without_cd[-1]
    ok = fmin >= 0.999 and gap > 0.05 and gauge <= 1e-4 and dt < 60
    assert acceptance(4, "double-soliton transport", ok,
                      f"min F_cd={fmin:.9f} final F_bare={run_.fidelity_without_cd[-1]:.4f} "
                      f"gauge |psi|^2 diff={gauge:.1e} ({dt:.1f}s)")


def test_c05_toda_n3(acceptance):
    v1, v2 = 1.0, 2.0
    v = np.hypot(v1, v2)
    traj = toda.integrate_toda(toda.n3_closed_form(v1, v2, 0.0), (0.0, 1.0), 1e-3)
    c1 = toda.n3_closed_form(v1, v2, 1.0)
    rk = max(np.max(np.abs(traj.J[-1] - c1.J)), np.max(np.abs(traj.h[-1] - c1.h)))
    z = toda.n3_closed_form(v1, v2, 0.0)
    t0_err = max(np.max(np.abs(z.bonds - [v1, v2])), np.max(np.abs(z.h)))
    late = np.max(np.abs(toda.n3_closed_form(v1, v2, 20 / v).h - [v, 0.0, -v]))
    e = 1e-5
    lax = max(toda.lax_residual(toda.n3_closed_form(v1, v2, t - e), toda.n3_closed_form(v1, v2, t),
                                toda.n3_closed_form(v1, v2, t + e), e) for t in np.linspace(-2, 2, 9))
    long = toda.integrate_toda(z, (0.0, 5.0), 1e-3, record_every=50)
    drift = long.eigenvalue_drift()
    moser = max(moser_errors(0))
    ok = rk <= 1e-8 and t0_err <= 1e-12 and late <= 1e-6 and lax < 1e-7 and drift <= 1e-8 and moser < 1e-4
    assert acceptance(5, "Toda N=3", ok,
                      f"RK4 err={rk:.1e} t=0 err={t0_err:.1e} h(20/v) err={late:.1e} lax={lax:.1e} "
                      f"eig drift={drift:.1e} moser={moser:.1e}")


def test_c06_fig4_spectra(acceptance):
    sched = lambda t: toda.toda_single_soliton(100, t, 2.0, 1.0, -50)

    def run():
        return xy.spectrum_flow([-5.0, 0.0, 5.0], sched, "double_flip"), \
            max(lift_error(N, np.random.default_rng(N)) for N in range(2, 11))
    (flow, lift), dt = _timed(run)
    widths = flow.band_widths()
    ok = (abs(widths[0] - 4.0) <= 0.1 and len(widths) > 1 and abs(widths[1] - 2.0) <= 0.1
          and flow.drift() <= 1e-6 and lift <= 1e-10 and dt < 30)
    assert acceptance(6, "double-flip spectra", ok,
                      f"continuum={widths[0]:.4f} bound={widths[1]:.4f} drift={flow.drift():.1e} "
                      f"pairwise={lift:.1e} ({dt:.1f}s)")


def test_c07_spin_transport(acceptance):
    sched = lambda t: toda.toda_single_soliton(40, t, 1.0, 1.0, -20)
    psi0 = bound_state_start(sched, -5.0)
    cd = xy.evolve_sector(psi0, sched, True, (-5.0, 5.0), 0.01)
    ctrl = xy.evolve_sector(psi0, sched, False, (-0.5, 0.5), 0.001, time_scale=10.0)
    ok = np.min(cd.occupation) >= 0.999 and ctrl.occupation[-1] < cd.occupation[-1]
    assert acceptance(7, "spin transport", ok,
                      f"min occupation (CD)={np.min(cd.occupation):.12f} "
                      f"x10 compressed no-CD final={ctrl.occupation[-1]:.2e}")


def test_c08_oracle_equivalence(acceptance):
    rng = np.random.default_rng(8)
    off = max(oracle_errors(5, rng)[0] for _ in range(4))
    assert acceptance(8, "spectral CD oracle equivalence", off <= 1e-7, f"max off-diagonal diff={off:.1e}")


def test_c09_inverse_engineering(acceptance):
    sched = lambda t: toda.n3_closed_form(1.0, 2.0, t)
    red = ext.toda_reduced_coeffs(sched)
    times = np.linspace(-1.0, 1.0, 9)
    res = max(ext.xy_invariant_residual(red, t) for t in times)
    U = xy.theta_gauge(3)
    gauge = 0.0
    for t in times:
        had, hcd = xy.one_body(sched(t))
        gauge = max(gauge, np.max(np.abs(xy.gauge_transform(xy.inverse_engineered_hamiltonian(sched(t)), U)
                                         - (had + hcd))))
    fx = ext.alpha_extension_fixture(1.0, 2.0, 1.0)
    rep = ext.alpha_extension_check(fx, 1.0)
    ok = res < 1e-7 and gauge <= 1e-12 and rep.commutator_norm <= 1e-8 and rep.ok
    assert acceptance(9, "inverse engineering", ok,
                      f"xy residual={res:.1e} gauge={gauge:.1e} [H,F](tau)={rep.commutator_norm:.1e}")


def test_c10_nonisospectral(acceptance):
    grid = Grid1D(-20.0, 20.0, 512)
    g = ext.GammaSchedule.linear(0.1).validate((0.0, 5.0))
    well = ext.ScaleInvariantField(PolynomialWell([0.0, 0.0, 1.0]), g)
    E0 = ext.instantaneous_energies(well, grid, 0.0, 3)
    scale = max(np.max(np.abs(ext.instantaneous_energies(well, grid, t, 3) / (E0 / g.gamma(t) ** 2) - 1))
                for t in np.linspace(0.0, 5.0, 6))
    ge = ext.GammaSchedule.exponential(0.1)
    dressed = ext.DressedKdVField(kdv.double_soliton(FIG1), ge)
    X = np.random.default_rng(10).uniform(-10, 10, 2000)
    r = max(np.max(np.abs(ext.generalized_kdv_residual(dressed, ge, ext.dressed_kdv_coefficient(ge, t), 0.0, X, t)))
            for t in np.linspace(0.0, 5.0, 6))
    u = kdv.double_soliton(FIG1)
    same = all(np.array_equal(ext.generalized_kdv_residual(u, ext.GammaSchedule.constant(), -4.0, 0.0, X, t),
                              kdv.kdv_residual(u, X, t)) for t in (-1.0, 0.0, 2.0))
    ok = scale <= 1e-4 and r < 1e-6 and same
    assert acceptance(10, "nonisospectral driving", ok,
                      f"energy scaling err={scale:.1e} dressed KdV={r:.1e} gamma=1 bit-identical={same}")


def test_c11_susy_identities(acceptance):
    rng = np.random.default_rng(11)
    X, T = rng.uniform(-20, 20, 5000), rng.uniform(-3, 3, 5000)
    W = kdv.superpotential(FIG1)
    u = np.max(np.abs(SuperpartnerField(W, FIG1.E0, -1)(X, T) - kdv.double_soliton(FIG1)(X, T)))
    partner = np.max(np.abs(kdv.partner_potential(W, FIG1.E0)(X, T) - kdv.partner_closed_form(FIG1)(X, T)))
    p1 = kdv.SolitonParams((1.2,), (3.0,))
    flat = np.max(np.abs(kdv.partner_potential(kdv.superpotential(p1), p1.E0)(X, T)))
    grid = Grid1D(-40.0, 40.0, 1024)
    zm = 0.0
    for t in (-1.0, 0.0, 1.0):
        psi = kdv.adiabatic_ground_state(FIG1, grid, t).values.real
        zm = max(zm, np.max(np.abs(spectral_derivative(psi, grid) + W(grid.x, t) * psi)))
    ok = u < 1e-10 and partner < 1e-10 and flat < 1e-10 and zm < 1e-8
    assert acceptance(11, "SUSY identities", ok,
                      f"u={u:.1e} partner={partner:.1e} single flat={flat:.1e} zero mode={zm:.1e}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
