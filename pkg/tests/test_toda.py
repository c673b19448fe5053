import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from lax_shortcuts.errors import DivergenceError, InvalidArgumentError
from lax_shortcuts.toda import (TodaState, integrate_toda, lax_matrices, lax_residual, moser_limit, n3_closed_form,
                                soliton_peak_site, toda_rhs, toda_single_soliton, with_boundary)

# frozen from the closed form (hand-checked for J_1 from the sech formula)
N3_T05_J = [1.143155052717349, 0.663175528098922, 0.0]
N3_T05_H = [1.184349970930689, 0.891530209020699, -2.075880179951388]
SOLITON_T0_J = [0.502938807991764, 0.520764465540444, 0.616057940172884, 0.770360734372603,
                0.641572738428718, 0.52730809863353, 0.503921242807895, 0.5005351205107]
SOLITON_T0_H = [-0.002172626291183, -0.01580796516137, -0.10479340352967, -0.42183842340031,
                -0.471201805678884, -0.134669018159476, -0.021017825041209, -0.002903579040441]

vs = st.floats(0.2, 3.0)


def test_state_validation():
    with pytest.raises(InvalidArgumentError):
        TodaState([1.0, 0.0], [0.0, 0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        TodaState([1.0, 0.0], [0.0, 0.0], "periodic")
    assert TodaState([1.0, 2.0], [0.0, 0.0]).J[-1] == 0.0


def test_uniform_infinite_chain_is_fixed_point():
    s = TodaState(np.full(6, 0.5), np.zeros(6), "infinite_truncated")
    d = toda_rhs(s)
    assert np.all(d.J == 0) and np.all(d.h == 0)


def test_uniform_open_chain_fields_only_move_at_the_ends():
    d = toda_rhs(TodaState(np.ones(5), np.zeros(5)))
    assert np.all(d.h[1:-1] == 0) and d.h[0] > 0 and d.h[-1] < 0


def test_n3_frozen_values():
    s = n3_closed_form(1.0, 2.0, 0.5)
    assert np.allclose(s.J, N3_T05_J, atol=1e-13)
    assert np.allclose(s.h, N3_T05_H, atol=1e-13)


@given(vs, vs)
def test_n3_endpoints(v1, v2):
    s0 = n3_closed_form(v1, v2, 0.0)
    assert np.allclose(s0.bonds, [v1, v2], atol=1e-14, rtol=0)
    assert np.all(np.abs(s0.h) < 1e-15)
    v = np.hypot(v1, v2)
    late = n3_closed_form(v1, v2, 20.0 / v)
    assert np.allclose(late.h, [v, 0.0, -v], atol=1e-6)
    assert np.all(late.bonds < 1e-6)
    early = n3_closed_form(v1, v2, -20.0 / v)
    assert np.allclose(early.h, [-v, 0.0, v], atol=1e-6)


@given(vs, vs, st.floats(-2, 2))
def test_n3_solves_toda(v1, v2, t):
    e = 1e-5
    d = (n3_closed_form(v1, v2, t + e).as_vector() - n3_closed_form(v1, v2, t - e).as_vector()) / (2 * e)
    assert np.max(np.abs(d - toda_rhs(n3_closed_form(v1, v2, t)).as_vector())) < 1e-6 * max(1.0, v1 + v2) ** 3


def test_n3_rejects_nonpositive():
    with pytest.raises(InvalidArgumentError):
        n3_closed_form(0.0, 1.0, 0.0)


def test_rk4_matches_closed_form():
    traj = integrate_toda(n3_closed_form(1.0, 2.0, 0.0), (0.0, 1.0), 1e-3)
    c = n3_closed_form(1.0, 2.0, 1.0)
    assert np.max(np.abs(traj.J[-1] - c.J)) < 1e-8
    assert np.max(np.abs(traj.h[-1] - c.h)) < 1e-8


@given(st.lists(st.floats(0.2, 1.5), min_size=2, max_size=6), st.integers(0, 2 ** 16))
def test_isospectral_and_trace(bonds, seed):
    h = np.random.default_rng(seed).normal(size=len(bonds) + 1)
    s0 = TodaState(bonds + [0.0], h)
    traj = integrate_toda(s0, (0.0, 1.0), 2e-3, record_every=100)
    assert traj.eigenvalue_drift() < 1e-8
    assert np.allclose(traj.h.sum(axis=1), h.sum(), atol=1e-12)


def test_blow_up_detected():
    with pytest.raises(DivergenceError):
        # RK4 far outside its stability region for couplings of size 10
        integrate_toda(TodaState([10.0, 10.0, 0.0], [0.0, 0.0, 0.0]), (0.0, 50.0), 0.5)


@given(st.floats(-2, 2))
def test_lax_equation(t):
    e = 1e-5
    r = lax_residual(n3_closed_form(1.0, 2.0, t - e), n3_closed_form(1.0, 2.0, t), n3_closed_form(1.0, 2.0, t + e), e)
    assert r < 1e-7


def test_lax_matrix_structure():
    lp = lax_matrices(n3_closed_form(1.0, 2.0, 0.3))
    assert np.allclose(lp.M.entries, -lp.M.entries.T)
    assert np.allclose(lp.L.entries, lp.L.entries.T)
    with pytest.raises(InvalidArgumentError):
        lax_matrices(TodaState(np.full(4, 0.5), np.zeros(4), "infinite_truncated"))


@settings(max_examples=10, suppress_health_check=[HealthCheck.filter_too_much])
@given(st.integers(2, 8), st.integers(0, 2 ** 16))
def test_moser_sorting(N, seed):
    rng = np.random.default_rng(seed)
    s0 = TodaState(np.r_[rng.uniform(0.3, 1.5, N - 1), 0.0], np.zeros(N))
    ev = s0.eigenvalues()
    assume(np.min(np.diff(ev)) > 0.3)  # the 50/gap horizon grows as the gap closes
    final = moser_limit(s0)
    last = final.state(len(final) - 1)
    assert np.max(np.abs(last.h - ev[::-1])) < 1e-4
    assert np.max(np.abs(last.bonds)) < 1e-4


def test_soliton_frozen_values():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = toda_single_soliton(8, 0.0, 1.0, 1.0, -4)
    assert np.allclose(s.J, SOLITON_T0_J, atol=1e-13)
    assert np.allclose(s.h, SOLITON_T0_H, atol=1e-13)


def test_soliton_far_field_and_warning():
    s = toda_single_soliton(60, 0.0, 1.0, 1.0, -30)
    assert abs(s.J[-1] - 0.5) < 1e-12 and abs(s.h[-1]) < 1e-12
    with pytest.warns(RuntimeWarning):
        toda_single_soliton(4, 0.0, 1.0, 1.0, -2)


@given(st.floats(0.5, 2.0), st.floats(-3, 3))
def test_soliton_solves_truncated_toda(kappa, t):
    s = toda_single_soliton(80, t, kappa, 1.0, -40)
    e = 1e-5
    d = (toda_single_soliton(80, t + e, kappa, 1.0, -40).as_vector()
         - toda_single_soliton(80, t - e, kappa, 1.0, -40).as_vector()) / (2 * e)
    assert np.max(np.abs(d - toda_rhs(s).as_vector())) < 1e-7


@given(st.floats(-4, 4))
def test_soliton_peak_tracks_velocity(t):
    k = 1.0
    s = toda_single_soliton(60, t, k, 1.0, -30)
    sites = np.arange(-30, 30)
    assert abs(sites[np.argmax(np.abs(s.h))] - soliton_peak_site(t, k)) <= 1.0


def test_with_boundary_copies():
    s = n3_closed_form(1.0, 2.0, 0.1)
    t = with_boundary(s, "infinite_truncated")
    t.J[0] = 9.0
    assert s.J[0] != 9.0 and t.boundary == "infinite_truncated"
