"""Scenario runners behind the command line.

Each runner takes merged params and returns a :class:`ScenarioResult` with
tables (written as CSV/JSON), a JSON summary and tolerance checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from . import extensions as ext
from . import kdv, tdse, toda, xy
from .field import Grid1D, cd3_matrix, hamiltonian_matrix, spectral_derivative, invariant_residual
from .spacetime import GaussianBump, PolynomialWell, SumField, SuperpartnerField

STRICT_FACTOR = 0.1


@dataclass
class Check:
    """One tolerance test.

    ``kind`` is ``"max"`` (value <= bound), ``"within"`` (|value - target| <= bound),
    ``"near_above"`` (value >= target - bound) or ``"exceeds"`` (value > bound).
    The strict profile shrinks ``bound`` for every kind except ``"exceeds"``,
    whose bound is a sensitivity threshold rather than an accuracy target,
    and for checks marked ``scalable=False`` (lattice-resolution quantities).
    """

    name: str
    value: float
    kind: str
    bound: float
    target: float = 0.0
    scalable: bool = True

    def effective_bound(self, profile: str = "default") -> float:
        if profile == "strict" and self.kind != "exceeds" and self.scalable:
            return self.bound * STRICT_FACTOR
        return self.bound

    def passed(self, profile: str = "default") -> bool:
        b = self.effective_bound(profile)
        v = self.value
        if not np.isfinite(v):
            return False
        if self.kind == "max":
            return v <= b
        if self.kind == "within":
            return abs(v - self.target) <= b
        if self.kind == "near_above":
            return v >= self.target - b
        if self.kind == "exceeds":
            return v > b
        raise ValueError(f"unknown check kind {self.kind!r}")

    def report(self, profile: str = "default") -> dict:
        out = {"name": self.name, "value": float(self.value), "kind": self.kind,
               "bound": self.effective_bound(profile), "passed": bool(self.passed(profile))}
        if self.kind in ("within", "near_above"):
            out["target"] = self.target
        return out


@dataclass
class Table:
    columns: list
    rows: np.ndarray


@dataclass
class ScenarioResult:
    scenario: str
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def add(self, name, value, kind, bound, target=0.0, tolerances=None, scalable=True):
        if tolerances and name in tolerances:
            bound = float(tolerances[name])
        self.checks.append(Check(name, float(value), kind, float(bound), float(target), scalable))


def _grid(g) -> Grid1D:
    return Grid1D(float(g["x_min"]), float(g["x_max"]), int(g["n_points"]))


def _params(p) -> kdv.SolitonParams:
    return kdv.SolitonParams(tuple(p["kappas"]), tuple(p["amps"]))


# --- KdV ---------------------------------------------------------------------

def run_kdv_transport(p: dict) -> ScenarioResult:
    res = ScenarioResult("kdv_transport")
    tol = p["tolerances"]
    P, grid = _params(p), _grid(p["grid"])
    t0, t1 = p["t_window"]
    run = tdse.double_soliton_transport(P, grid, t0, t1, p["dt"], p["convention"], p["record_every"],
                                        snapshot_times=p["snapshot_times"])
    res.tables["fidelity"] = Table(["t", "fidelity_with_cd", "fidelity_without_cd", "norm"],
                                   np.column_stack([run.times, run.fidelity_with_cd,
                                                    run.fidelity_without_cd, run.norm_with_cd]))
    u = kdv.double_soliton(P)
    vcd = kdv.cd_potential_vcd(P, p["convention"])
    x = grid.x
    for i, ts in enumerate(p["snapshot_times"]):
        res.tables[f"snapshot_{i}"] = Table(
            ["x", "u", "u_plus_vcd", "density_cd", "density_no_cd"],
            np.column_stack([x, u(x, ts), u(x, ts) + vcd(x, ts), run.snapshots_with_cd[ts].density(),
                             run.snapshots_without_cd[ts].density()]))
    res.tables["fields"] = field_samples(P, grid, p["snapshot_times"], p["convention"])
    gauge_diff = gauge_consistency(P, grid, t0, t1)
    gap = run.fidelity_with_cd[-1] - run.fidelity_without_cd[-1]
    drift = max(np.max(np.abs(run.norm_with_cd - 1)), np.max(np.abs(run.norm_without_cd - 1)))
    res.summary = {"convention": p["convention"], "snapshot_times": list(p["snapshot_times"]),
                   "min_fidelity_with_cd": float(run.fidelity_with_cd.min()),
                   "final_fidelity_with_cd": float(run.fidelity_with_cd[-1]),
                   "final_fidelity_without_cd": float(run.fidelity_without_cd[-1]),
                   "gauge_density_difference": gauge_diff}
    res.add("min_fidelity_with_cd", run.fidelity_with_cd.min(), "near_above", 1e-3, 1.0, tol)
    res.add("final_fidelity_gap", gap, "exceeds", 0.05, tolerances=tol)
    res.add("norm_drift", drift, "max", 1e-6, tolerances=tol)
    res.add("gauge_vs_operator_density", gauge_diff, "max", 1e-4, tolerances=tol)
    return res


def field_samples(P: kdv.SolitonParams, grid: Grid1D, times, convention: str = "shifted") -> Table:
    """Long-format samples of u, W, the partner potential and V_cd on the grid."""
    u, W = kdv.double_soliton(P), kdv.superpotential(P)
    partner, vcd = kdv.partner_closed_form(P), kdv.cd_potential_vcd(P, convention)
    x = grid.x
    rows = [np.column_stack([x, np.full_like(x, t), u(x, t), W(x, t), partner(x, t), vcd(x, t)]) for t in times]
    return Table(["x", "t", "u", "W", "u_partner", "V_cd"], np.vstack(rows))


def gauge_consistency(P: kdv.SolitonParams, grid: Grid1D, t0: float, t1: float) -> float:
    """Max density difference between the scalar-V_cd gauge frame and the linear-p operator frame.

    Run on half the grid resolution (at least 512 points) with the largest comfortable RK4 step.
    """
    g = Grid1D(grid.x_min, grid.x_max, max(512, grid.n_points // 2))
    dt = min(1e-3, 0.4 / g.k_nyquist ** 2)
    u = kdv.double_soliton(P)
    op = tdse.DrivingSpec(u, "linear_p", cd_field=tdse.operator_frame_coefficient(P))
    psi0 = kdv.adiabatic_ground_state(P, g, t0)
    r_op = tdse.propagate(psi0, op, t0, t1, dt, record_every=t1 - t0)
    gs = tdse.DrivingSpec(u, "scalar_vcd", cd_field=kdv.cd_potential_vcd(P), gauge_frame=True,
                          two_soliton_base=True)
    r_g = tdse.propagate(tdse.gauge_frame_reference(P, g)(t0), gs, t0, t1, dt, record_every=t1 - t0)
    return float(np.max(np.abs(r_op.final_state.density() - r_g.final_state.density())))


def bound_energy_flow(P, grid: Grid1D, times) -> np.ndarray:
    u = kdv.double_soliton(P)
    return np.array([tdse.instantaneous_eigenstates(u, grid, t, P.n_solitons)[0] for t in times])


def cd3_residuals(u, grid: Grid1D, t: float, eps: float, a_values=(-4.0, -2.0)):
    lo = hamiltonian_matrix(u.sample(grid, t - eps), grid)
    hi = hamiltonian_matrix(u.sample(grid, t + eps), grid)
    had = hamiltonian_matrix(u.sample(grid, t), grid)
    return [invariant_residual((lo, hi), cd3_matrix(u.sample(grid, t), grid, a=a), had, eps, grid=grid)
            for a in a_values]


def cd5_residual(kappa: float, grid: Grid1D, t: float, eps: float) -> float:
    u = kdv.traveling_sech2(kappa, 16 * kappa ** 4)
    lo = hamiltonian_matrix(u.sample(grid, t - eps), grid)
    hi = hamiltonian_matrix(u.sample(grid, t + eps), grid)
    had = hamiltonian_matrix(u.sample(grid, t), grid)
    D, _ = u.jet(grid.x, t, 2)
    return invariant_residual((lo, hi), kdv.cd5_matrix(D[0], D[2], grid), had, eps, grid=grid)


def susy_residuals(P: kdv.SolitonParams, x, t, grid: Grid1D) -> dict:
    W = kdv.superpotential(P)
    u = kdv.double_soliton(P)
    out = {
        "susy_u": np.max(np.abs(SuperpartnerField(W, W.E0, -1)(x, t) - u(x, t))),
        "susy_partner": np.max(np.abs(kdv.partner_potential(W, W.E0)(x, t) - kdv.partner_closed_form(P)(x, t))),
    }
    psi = kdv.adiabatic_ground_state(P, grid, 0.0).values.real
    out["zero_mode"] = np.max(np.abs(spectral_derivative(psi, grid) + W(grid.x, 0.0) * psi))
    P1 = kdv.SolitonParams((P.kappas[0],), (P.amps[0],))
    W1 = kdv.superpotential(P1)
    out["single_partner_flat"] = np.max(np.abs(kdv.partner_potential(W1, W1.E0)(x, t)))
    return {k: float(v) for k, v in out.items()}


def run_kdv_certify(p: dict) -> ScenarioResult:
    res = ScenarioResult("kdv_certify")
    tol = p["tolerances"]
    P, grid = _params(p), _grid(p["grid"])
    rng = np.random.default_rng(p["seed"])
    X = rng.uniform(grid.x_min, grid.x_max, p["n_random"])
    T = rng.uniform(-3.0, 3.0, p["n_random"])
    single = kdv.single_soliton(P.kappas[0], P.amps[0])
    double = kdv.double_soliton(P)
    r_single = np.max(np.abs(kdv.kdv_residual(single, X, T)))
    r_double = np.max(np.abs(kdv.kdv_residual(double, X, T)))
    bump = GaussianBump(0.01)
    r_perturbed = min(np.max(np.abs(kdv.kdv_residual(SumField(f, bump), X, T))) for f in (single, double))
    res.add("kdv_residual_single", r_single, "max", 1e-8, tolerances=tol)
    res.add("kdv_residual_double", r_double, "max", 1e-8, tolerances=tol)
    res.add("kdv_residual_perturbed_control", r_perturbed, "exceeds", 1e-4, tolerances=tol)

    spec_grid = Grid1D(-40.0, 40.0, 1024)
    times = np.linspace(-3, 3, 7)
    E = bound_energy_flow(P, spec_grid, times)
    res.tables["bound_energies"] = Table(["t", "E0", "E1"], np.column_stack([times, E]))
    res.add("bound_energy_E0", E[len(times) // 2, 0], "within", 1e-3, -P.kappas[0] ** 2, tol)
    res.add("bound_energy_E1", E[len(times) // 2, 1], "within", 1e-3, -P.kappas[1] ** 2, tol)
    res.add("bound_energy_drift", np.max(np.abs(E - E[0])), "max", 1e-3, tolerances=tol)

    r3, r3_wrong = cd3_residuals(double, grid, p["t_sample"], p["eps"])
    res.add("cd3_invariant_residual", r3, "max", 1e-6, tolerances=tol)
    res.add("cd3_wrong_coefficient_control", r3_wrong, "exceeds", 1e-2, tolerances=tol)
    k5 = p["kappa5"]
    speed = kdv.kdv5_soliton_speed(k5)
    res.add("kdv5_speed", speed, "within", 1e-6, 16 * k5 ** 4, tol)
    r5 = cd5_residual(k5, grid, p["t_sample"], p["eps"])
    res.add("cd5_invariant_residual", r5, "max", 1e-5, tolerances=tol)

    susy = susy_residuals(P, X, T, spec_grid)
    for name in ("susy_u", "susy_partner", "single_partner_flat"):
        res.add(name, susy[name], "max", 1e-10, tolerances=tol)
    res.add("zero_mode", susy["zero_mode"], "max", 1e-8, tolerances=tol)
    res.summary = {"kdv5_speed": speed, "bound_energies_t0": E[len(times) // 2].tolist(), **susy}
    return res


# --- Toda --------------------------------------------------------------------

def moser_errors(seed: int, sizes=(2, 3, 5, 8)) -> list:
    rng = np.random.default_rng(seed)
    errs = []
    for N in sizes:
        s0 = toda.TodaState(np.r_[rng.uniform(0.3, 1.5, N - 1), 0.0], np.zeros(N))
        traj = toda.moser_limit(s0)
        final = traj.state(len(traj) - 1)
        target = np.sort(s0.eigenvalues())[::-1]
        errs.append(max(float(np.max(np.abs(final.h - target))), float(np.max(np.abs(final.bonds)))))
    return errs


def run_toda_n3(p: dict) -> ScenarioResult:
    res = ScenarioResult("toda_n3")
    tol = p["tolerances"]
    v1, v2 = p["v1"], p["v2"]
    v = np.hypot(v1, v2)
    s0 = toda.n3_closed_form(v1, v2, p["t_window"][0])
    traj = toda.integrate_toda(s0, p["t_window"], p["dt"], record_every=p["record_every"])
    eig = np.array([traj.state(i).eigenvalues() for i in range(len(traj))])
    res.tables["trace"] = Table(["t", "J_1", "J_2", "h_1", "h_2", "h_3", "eig_1", "eig_2", "eig_3"],
                                np.column_stack([traj.times, traj.J[:, :2], traj.h, eig]))
    closed = np.array([toda.n3_closed_form(v1, v2, t).as_vector() for t in traj.times])
    res.tables["closed_form"] = Table(["t", "J_1", "J_2", "h_1", "h_2", "h_3"],
                                      np.column_stack([traj.times, closed[:, :2], closed[:, 3:]]))
    one = toda.integrate_toda(toda.n3_closed_form(v1, v2, 0.0), (0.0, 1.0), 1e-3)
    c1 = toda.n3_closed_form(v1, v2, 1.0)
    rk_err = max(np.max(np.abs(one.J[-1] - c1.J)), np.max(np.abs(one.h[-1] - c1.h)))
    res.add("rk4_vs_closed_form_t1", rk_err, "max", 1e-8, tolerances=tol)
    z = toda.n3_closed_form(v1, v2, 0.0)
    res.add("endpoint_t0", max(np.max(np.abs(z.bonds - [v1, v2])), np.max(np.abs(z.h))), "max", 1e-12,
            tolerances=tol)
    late = toda.n3_closed_form(v1, v2, 20.0 / v)
    res.add("endpoint_late_h", np.max(np.abs(late.h - [v, 0.0, -v])), "max", 1e-6, tolerances=tol)
    e = 1e-5
    lax = max(toda.lax_residual(toda.n3_closed_form(v1, v2, t - e), toda.n3_closed_form(v1, v2, t),
                                toda.n3_closed_form(v1, v2, t + e), e) for t in np.linspace(-2, 2, 9))
    res.add("lax_residual", lax, "max", 1e-7, tolerances=tol)
    res.add("eigenvalue_drift", traj.eigenvalue_drift(), "max", 1e-8, tolerances=tol)
    res.add("trace_drift", np.max(np.abs(traj.h.sum(axis=1) - traj.h[0].sum())), "max", 1e-10,
            tolerances=tol)
    res.add("moser_endpoint", max(moser_errors(p["seed"])), "max", 1e-4, tolerances=tol)
    res.summary = {"v": v, "eigenvalues": eig[0].tolist()}
    return res


def run_toda_soliton(p: dict) -> ScenarioResult:
    res = ScenarioResult("toda_soliton")
    tol = p["tolerances"]
    N, k, c0, n1 = p["n_sites"], p["kappa"], p["c0"], p["first_site"]
    sched = lambda t: toda.toda_single_soliton(N, t, k, c0, n1)
    sites = np.arange(n1, n1 + N)
    rows, fd_err, peak_err, edge = [], 0.0, 0.0, 0.0
    e = 1e-5
    for t in p["times"]:
        s = sched(t)
        rows.append(np.column_stack([np.full(N, t), sites, s.J, s.h]))
        d = (sched(t + e).as_vector() - sched(t - e).as_vector()) / (2 * e)
        fd_err = max(fd_err, float(np.max(np.abs(d - toda.toda_rhs(s).as_vector()))))
        peak = sites[np.argmax(np.abs(s.h))]
        peak_err = max(peak_err, abs(peak - toda.soliton_peak_site(t, k, c0)))
        edge = max(edge, abs(s.J[0] - 0.5), abs(s.J[-1] - 0.5))
    res.tables["profiles"] = Table(["t", "n", "J", "h"], np.vstack(rows))
    t0, t1 = p["times"][0], p["times"][-1]
    traj = toda.integrate_toda(sched(t0), (t0, t1), p["dt"], record_every=10 ** 9)
    rk = max(np.max(np.abs(traj.J[-1] - sched(t1).J)), np.max(np.abs(traj.h[-1] - sched(t1).h)))
    res.add("rhs_vs_time_derivative", fd_err, "max", 1e-7, tolerances=tol)
    res.add("far_field_relaxed", edge, "max", 1e-6, tolerances=tol)
    res.add("peak_site_offset", peak_err, "max", 1.0, tolerances=tol, scalable=False)
    res.add("rk4_vs_closed_form", rk, "max", 1e-8, tolerances=tol)
    res.summary = {"bound_energy": float(-np.cosh(k)), "speed_sites_per_time": float(np.sinh(k) / k)}
    return res


# --- spin chain --------------------------------------------------------------

def random_open_state(N: int, rng) -> toda.TodaState:
    return toda.TodaState(np.r_[rng.uniform(0.3, 1.2, N - 1), 0.0], rng.normal(size=N))


def lift_error(N: int, rng) -> float:
    s = random_open_state(N, rng)
    e1 = s.eigenvalues()
    i, j = np.triu_indices(N, 1)
    return float(np.max(np.abs(xy.sector_eigenvalues(s, "double_flip") - np.sort(e1[i] + e1[j]))))


def fock_restriction_error(N: int, rng) -> float:
    s = random_open_state(N, rng)
    had, hcd = xy.spin_hamiltonians(s)
    err = 0.0
    for sec in xy.SECTORS:
        m = xy.build_sector(s, sec, dense=True)
        err = max(err, np.max(np.abs(xy.restrict_to_sector(had, N, sec) - m.H_ad.dense())),
                  np.max(np.abs(xy.restrict_to_sector(hcd, N, sec) - m.H_cd.dense())))
    return float(err)


def run_spin_spectrum(p: dict) -> ScenarioResult:
    res = ScenarioResult("spin_spectrum")
    tol = p["tolerances"]
    N, k, c0, n1 = p["n_sites"], p["kappa"], p["c0"], p["first_site"]
    sched = lambda t: toda.toda_single_soliton(N, t, k, c0, n1)
    times = np.asarray(p["times"], dtype=float)
    flow = xy.spectrum_flow(times, sched, "double_flip")
    single = xy.spectrum_flow(times, sched, "single_flip")
    dim = flow.eigenvalues.shape[1]
    res.tables["spectrum_double"] = Table(
        ["t", "index", "energy"],
        np.column_stack([np.repeat(times, dim), np.tile(np.arange(dim), times.size), flow.eigenvalues.ravel()]))
    res.tables["spectrum_single"] = Table(
        ["t", "index", "energy"],
        np.column_stack([np.repeat(times, N), np.tile(np.arange(N), times.size), single.eigenvalues.ravel()]))
    s = sched(times[0])
    E1, V1 = eigh(xy.one_body(s)[0])
    b = xy.bound_state_index(E1)
    res.tables["eigvec_single_bound"] = Table(["n", "amplitude"], np.column_stack([np.arange(n1, n1 + N), V1[:, b]]))
    H2 = xy.build_sector(s, "double_flip", dense=False).H_ad.entries.real
    _, v2 = eigsh(H2.tocsc(), k=1, sigma=float(flow.eigenvalues[0, 0]) - 1e-3)
    v2 = v2[:, 0] * np.sign(v2[np.argmax(np.abs(v2[:, 0])), 0])
    labels = np.array(xy.pair_labels(N)) + n1
    res.tables["eigvec_double_lowest"] = Table(["m", "n", "amplitude"], np.column_stack([labels, v2]))
    bands = sorted(flow.bands(0), key=lambda x: -x[2])
    widths = [hi - lo for lo, hi, _ in bands]
    rng = np.random.default_rng(p["seed"])
    res.summary = {"bands": [{"low": lo, "high": hi, "count": c} for lo, hi, c in bands],
                   "band_widths": {"continuum": widths[0], "bound": widths[1] if len(widths) > 1 else None},
                   "single_flip_bound_energy": float(E1[b])}
    res.add("continuum_band_width", widths[0], "within", 0.1, 4.0, tol)
    res.add("bound_band_width", widths[1] if len(widths) > 1 else np.nan, "within", 0.1, 2.0, tol)
    res.add("spectrum_drift", flow.drift(), "max", 1e-6, tolerances=tol)
    res.add("pairwise_sum_lift", lift_error(p["lift_check_sites"], rng), "max", 1e-10, tolerances=tol)
    res.add("spin_space_restriction", fock_restriction_error(6, rng), "max", 1e-12, tolerances=tol)
    return res


def oracle_errors(N: int, rng, n_times: int = 5):
    """Off-diagonal mismatch between Toda and spectral H_cd, and the oracle's own invariant residual."""
    s0 = random_open_state(N, rng)
    traj = toda.integrate_toda(s0, (0.0, 1.0), 1e-3, record_every=1000 // (n_times - 1))
    # three-site closed form embedded in the first sites, the rest a free-running Toda block
    blocks = []
    for t in (0.3, 0.9):
        c = toda.n3_closed_form(1.0, 2.0, t)
        J = np.r_[c.bonds, 0.0, rng.uniform(0.3, 1.0, N - 4), 0.0]
        h = np.r_[c.h, 0.5 + rng.normal(size=N - 3)]
        blocks.append(toda.TodaState(J, h))
    off, self_res = 0.0, 0.0
    for s in [traj.state(i) for i in range(len(traj))] + blocks:
        H, hcd = xy.one_body(s)
        O = xy.spectral_cd_oracle(s)
        off = max(off, float(np.max(np.abs(xy.offdiagonal_in_eigenbasis(O.entries, H)
                                           - xy.offdiagonal_in_eigenbasis(hcd, H)))))
        self_res = max(self_res, xy.invariant_residual_sector(s, h_cd=O))
    return off, self_res


def bound_state_start(sched, t0):
    E, V = eigh(xy.one_body(sched(t0))[0])
    return V[:, xy.bound_state_index(E)].astype(complex)


def run_spin_transfer(p: dict) -> ScenarioResult:
    res = ScenarioResult("spin_transfer")
    tol = p["tolerances"]
    N, k, c0, n1 = p["n_sites"], p["kappa"], p["c0"], p["first_site"]
    sched = lambda t: toda.toda_single_soliton(N, t, k, c0, n1)
    t0, t1 = p["t_window"]
    psi0 = bound_state_start(sched, t0)
    cd = xy.evolve_sector(psi0, sched, True, (t0, t1), p["dt"])
    f = p["compression"]
    ctrl = xy.evolve_sector(psi0, sched, False, (t0 / f, t1 / f), p["dt"] / f, time_scale=f)
    res.tables["occupation_cd"] = Table(["t", "occupation", "norm"],
                                        np.column_stack([cd.times, cd.occupation, cd.norm]))
    res.tables["occupation_control"] = Table(["t", "occupation", "norm"],
                                             np.column_stack([ctrl.times * f, ctrl.occupation, ctrl.norm]))
    rng = np.random.default_rng(p["seed"])
    off, self_res = oracle_errors(p["oracle_sites"], rng)
    res.summary = {"min_occupation_cd": float(cd.occupation.min()), "final_occupation_cd": float(cd.occupation[-1]),
                   "final_occupation_control": float(ctrl.occupation[-1]), "compression": f}
    res.add("min_occupation_cd", cd.occupation.min(), "near_above", 1e-3, 1.0, tol)
    res.add("control_occupation_deficit", cd.occupation[-1] - ctrl.occupation[-1], "exceeds", 0.0, tolerances=tol)
    res.add("sector_norm_drift", max(np.max(np.abs(cd.norm - 1)), np.max(np.abs(ctrl.norm - 1))), "max", 1e-8,
            tolerances=tol)
    res.add("oracle_offdiagonal_agreement", off, "max", 1e-7, tolerances=tol)
    res.add("oracle_invariant_residual", self_res, "max", 1e-8, tolerances=tol)
    return res


# --- extensions --------------------------------------------------------------

def run_inverse_engineering(p: dict) -> ScenarioResult:
    res = ScenarioResult("inverse_engineering")
    tol = p["tolerances"]
    v1, v2, tau = p["v1"], p["v2"], p["tau"]
    sched = lambda t: toda.n3_closed_form(v1, v2, t)
    red = ext.toda_reduced_coeffs(sched)
    times = np.linspace(-1.0, 1.0, p["n_samples"])
    res.add("toda_reduced_residual", max(ext.xy_invariant_residual(red, t) for t in times), "max", 1e-7,
            tolerances=tol)
    bb = red.b
    pert = ext.XYInvariantCoeffs(red.a, lambda t: bb(t) + 1e-2, red.c, red.d, red.h)
    res.add("perturbed_b_control", max(ext.xy_invariant_residual(pert, t) for t in times), "exceeds", 1e-3,
            tolerances=tol)
    U = xy.theta_gauge(3)
    gauge = 0.0
    for t in times:
        s = sched(t)
        had, hcd = xy.one_body(s)
        gauge = max(gauge, np.max(np.abs(xy.gauge_transform(xy.inverse_engineered_hamiltonian(s), U) - (had + hcd))),
                    np.max(np.abs(xy.gauge_transform(ext.invariant_matrix(red, t), U) - had)))
    res.add("theta_gauge_identity", gauge, "max", 1e-12, tolerances=tol)
    fx = ext.alpha_extension_fixture(v1, v2, tau, p["k"], p["mu"])
    ts = np.linspace(0.0, tau, p["n_samples"])
    report = ext.alpha_extension_check(fx, tau, ts[1:-1])
    res.add("alpha_fixture_equations", max(ext.xy_invariant_residual(fx, t) for t in ts[1:-1]), "max", 1e-7,
            tolerances=tol)
    res.add("alpha_relations", max(report.relation_residuals.values()), "max", 1e-6, tolerances=tol)
    res.add("final_flatness", max(report.final_rates.values()), "max", 1e-6, tolerances=tol)
    res.add("final_commutator", report.commutator_norm, "max", 1e-8, tolerances=tol)
    rows = []
    for t in ts:
        a, b, c, d, h = fx.at(t)
        rows.append(np.r_[t, fx.alpha(t), fx.beta(t), a, b, c, d, h])
    res.tables["alpha_fixture"] = Table(["t", "alpha", "beta", "a_1", "a_2", "b_1", "b_2", "c_1", "c_2", "c_3",
                                         "d_1", "d_2", "h_1", "h_2", "h_3"], np.array(rows))
    res.summary = {"relation_residuals": report.relation_residuals, "final_rates": report.final_rates,
                   "commutator_norm": report.commutator_norm, "violations": report.violations}
    return res


def _gamma(spec) -> ext.GammaSchedule:
    kind, rate = spec["kind"], spec.get("rate", 0.0)
    if kind == "constant":
        return ext.GammaSchedule.constant()
    if kind == "linear":
        return ext.GammaSchedule.linear(rate)
    return ext.GammaSchedule.exponential(rate)


def run_nonisospectral(p: dict) -> ScenarioResult:
    res = ScenarioResult("nonisospectral")
    tol = p["tolerances"]
    grid = _grid(p["grid"])
    t0, t1 = p["t_window"]
    G = _gamma(p["gamma"]).validate((t0, t1))
    well = ext.ScaleInvariantField(PolynomialWell([0.0, 0.0, 1.0]), G)
    times = np.linspace(t0, t1, p["n_samples"])
    nl = p["n_levels"]
    E = np.array([ext.instantaneous_energies(well, grid, t, nl) for t in times])
    gam = np.array([G.gamma(t) for t in times])
    pred = E[0] * (gam[0] ** 2 / gam ** 2)[:, None]
    res.tables["energies"] = Table(["t", "gamma"] + [f"E_{n}" for n in range(nl)] + [f"predicted_{n}" for n in range(nl)],
                                   np.column_stack([times, gam, E, pred]))
    res.add("energy_scaling", np.max(np.abs(E / pred - 1)), "max", 1e-4, tolerances=tol)
    F = E * gam[:, None] ** 2
    res.add("invariant_spectrum_drift", np.max(np.abs(F - F[0])), "max", 1e-5, tolerances=tol)

    profile = kdv.traveling_sech2(1.0, 0.0)
    mid = 0.5 * (t0 + t1)
    scaled = ext.ScaleInvariantField(profile, G)
    res.add("scaled_invariant_residual", ext.scaled_invariant_residual(scaled, G, ext.CDSpec(), grid, mid),
            "max", 1e-7, tolerances=tol)
    moving = ext.GammaSchedule.constant(0.7)
    res.add("translational_residual",
            ext.scaled_invariant_residual(ext.ScaleInvariantField(profile, moving), moving, ext.CDSpec(), grid, mid),
            "max", 1e-7, tolerances=tol)
    if not G.is_constant:
        res.add("wrong_dilation_control",
                ext.scaled_invariant_residual(scaled, G, ext.CDSpec(dilation=1.0), grid, mid),
                "exceeds", 1e-3, tolerances=tol)
    ansatz = ext.second_order_ansatz_check(scaled, G, grid, mid)
    res.add("second_order_ansatz", max(ansatz["fit_residual"], ansatz["outside_span"]), "max", 1e-8,
            tolerances=tol)

    P = _params(p)
    Ge = ext.GammaSchedule.exponential(0.1) if G.is_constant else G
    dressed = ext.DressedKdVField(kdv.double_soliton(P), Ge)
    rng = np.random.default_rng(p["seed"])
    X = rng.uniform(0.5 * grid.x_min, 0.5 * grid.x_max, 2000)
    worst, match, depth = 0.0, 0.0, 0.0
    for t in times:
        a = ext.dressed_kdv_coefficient(Ge, t)
        worst = max(worst, float(np.max(np.abs(ext.generalized_kdv_residual(dressed, Ge, a, 0.0, X, t)))))
        g = Ge.gamma(t)
        deformed = kdv.double_soliton(kdv.SolitonParams(tuple(k / g for k in P.kappas), P.amps))
        match = max(match, float(np.max(np.abs(dressed(X, t) - deformed(X, t)))))
        E0 = ext.instantaneous_energies(dressed, Grid1D(-40.0, 40.0, 1024), t, 1)[0]
        depth = max(depth, abs(E0 + (P.kappas[0] / g) ** 2))
    res.add("dressed_kdv_residual", worst, "max", 1e-6, tolerances=tol)
    res.add("deformed_soliton_match", match, "max", 1e-10, tolerances=tol)
    res.add("bound_depth_scaling", depth, "max", 1e-3, tolerances=tol)
    u = kdv.double_soliton(P)
    same = all(np.array_equal(ext.generalized_kdv_residual(u, ext.GammaSchedule.constant(), -4.0, 0.0, X, t),
                              kdv.kdv_residual(u, X, t)) for t in times)
    res.add("constant_gamma_bit_identical", 0.0 if same else 1.0, "max", 0.0, tolerances=tol)
    res.summary = {"gamma": p["gamma"], "energies_t0": E[0].tolist(), "ansatz_coefficients": ansatz["coefficients"].tolist()}
    return res


# --- aggregate ---------------------------------------------------------------

QUICK_OVERRIDES = {
    "kdv_transport": {"grid": {"n_points": 512}, "dt": 1e-3, "record_every": 0.01},
    "spin_spectrum": {"n_sites": 40, "first_site": -20, "times": [-2.0, 2.0]},
    "spin_transfer": {"n_sites": 30, "first_site": -15, "t_window": [-3.0, 3.0], "dt": 0.02},
    "kdv_certify": {"n_random": 2000},
}


def run_verify_all(p: dict) -> ScenarioResult:
    from .config import DEFAULTS, merge
    res = ScenarioResult("verify_all")
    suites = {}
    for name in p["suites"]:
        params = DEFAULTS[name]
        if p["quick"]:
            params = merge(params, QUICK_OVERRIDES.get(name, {}))
        params = merge(params, {"seed": p["seed"]})
        sub = RUNNERS[name](params)
        for c in sub.checks:
            c.name = f"{name}.{c.name}"
            if c.name in p["tolerances"]:
                c.bound = float(p["tolerances"][c.name])
            res.checks.append(c)
        suites[name] = sub.summary
    res.summary = {"suites": suites, "quick": p["quick"]}
    return res


RUNNERS = {
    "kdv_transport": run_kdv_transport,
    "kdv_certify": run_kdv_certify,
    "toda_n3": run_toda_n3,
    "toda_soliton": run_toda_soliton,
    "spin_spectrum": run_spin_spectrum,
    "spin_transfer": run_spin_transfer,
    "inverse_engineering": run_inverse_engineering,
    "nonisospectral": run_nonisospectral,
    "verify_all": run_verify_all,
}


def run_scenario(scenario: str, params: dict) -> ScenarioResult:
    return RUNNERS[scenario](params)
