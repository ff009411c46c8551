import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qssa_cm.kinetics import (NondimHTA, NondimTQ, ParameterSet, RateConstants, StateLumped,
                              StateMM, Totals, ValidationError, carr_parameters, check_state,
                              conservation_residuals, derive_constants)
from qssa_cm.models import TimeFrame, full_mm_problem, hta_problem, lumped_problem, tq_problem
from qssa_cm.solver import SolverConfig, integrate, sample

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


def test_derived_constants_fig3_left(fig3_left):
    d = fig3_left.derived
    assert (d.K_M, d.K_D, d.K) == (4.0, 3.0, 1.0)
    assert d.eps_HTA == 1.0
    assert d.eps_SS == pytest.approx(0.2, rel=1e-15)
    assert d.eps_TQ == pytest.approx(1 / 36, rel=1e-15)


def test_derived_constants_fig1_consistent(fig1_consistent):
    d = fig1_consistent.derived
    assert d.K_M == 5.0 and d.K == 4.0
    assert d.eps_SS == pytest.approx(89 / 105, rel=1e-14)
    assert d.eps_TQ == pytest.approx(356 / 37636, rel=1e-14)
    assert round(d.eps_TQ, 2) == 0.01


@pytest.mark.parametrize("field", ["k1", "k_minus1", "k2"])
@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_rate_validation_names_field(field, bad):
    kwargs = {"k1": 1.0, "k_minus1": 1.0, "k2": 1.0, field: bad}
    with pytest.raises(ValidationError) as err:
        RateConstants(**kwargs)
    assert err.value.field == field


def test_totals_validation():
    with pytest.raises(ValidationError, match="E_T"):
        Totals(0, 1)
    with pytest.raises(ValidationError, match="X_T"):
        Totals(1, "x")


@given(positive, positive, positive, positive, positive)
@settings(max_examples=200, deadline=None)
def test_eps_tq_below_quarter(k1, km1, k2, e_t, x_t):
    d = derive_constants(RateConstants(k1, km1, k2), Totals(e_t, x_t))
    assert 0 < d.eps_TQ < 0.25
    assert d.K_D < d.K_M and d.K < d.K_M


@given(positive, positive, positive, positive, positive)
@settings(max_examples=200, deadline=None)
def test_tq_fractions_sum_to_one(k1, km1, k2, e_t, x_t):
    tq = ParameterSet.of(k1, km1, k2, e_t, x_t).tq
    assert tq.sigma + tq.eta + tq.kappa_m == pytest.approx(1.0, abs=1e-14)


def test_nondim_hta_values(fig3_left):
    p = fig3_left.hta
    assert (p.kappa, p.lam, p.eps) == (4.0, 1.0, 1.0)
    assert p.time_scale == 1.0


def test_nondim_tq_values(fig3_left):
    p = fig3_left.tq
    assert p.sigma == pytest.approx(1 / 6) and p.eta == pytest.approx(1 / 6)
    assert p.kappa_m == pytest.approx(2 / 3)
    assert p.c_scale == pytest.approx(1 / 6)
    assert p.time_scale == pytest.approx(6.0)


def test_nondim_round_trip(fig1_consistent):
    p = fig1_consistent.tq
    u, v, tau = p.to_nondim(37.0, 12.0, 0.3)
    assert np.allclose(p.to_dimensional(u, v, tau), (37.0, 12.0, 0.3), rtol=1e-15)


def test_hta_scaling_reproduces_dimensional_run():
    params = ParameterSet.of(2.0, 0.5, 1.5, 0.3, 4.0)
    p = params.hta
    cfg = SolverConfig(rtol=1e-11, atol=1e-13)
    tau_end = 5.0
    full = integrate(full_mm_problem(params, tau_end * p.time_scale), cfg)
    nd = integrate(hta_problem(p, tau_end, frame=TimeFrame.OUTER), cfg)
    tau = np.linspace(0, tau_end, 50)
    x, c, _ = p.to_dimensional(*sample(nd, tau).T, tau)
    ref = sample(full, tau * p.time_scale)
    assert np.allclose(x, ref[:, 0], rtol=1e-8, atol=1e-10)
    assert np.allclose(c, ref[:, 1], rtol=1e-8, atol=1e-10)


def test_tq_time_scale_is_s_over_k2_et():
    # nondimensional tau must be k2 E_T t / S for the scaled system to match
    params = ParameterSet.of(1.3, 0.7, 2.1, 0.8, 2.5)
    p = params.tq
    cfg = SolverConfig(rtol=1e-11, atol=1e-13)
    tau_end = 3.0
    s = params.totals.E_T + params.derived.K_M + params.totals.X_T
    assert p.time_scale == pytest.approx(s / (params.rates.k2 * params.totals.E_T))
    lumped = integrate(lumped_problem(params, tau_end * p.time_scale), cfg)
    nd = integrate(tq_problem(p, tau_end), cfg)
    tau = np.linspace(0, tau_end, 40)
    xbar, c, t = p.to_dimensional(*sample(nd, tau).T, tau)
    ref = sample(lumped, t)
    assert np.allclose(xbar, ref[:, 0], rtol=1e-8, atol=1e-10)
    assert np.allclose(c, ref[:, 1], rtol=1e-8, atol=1e-10)


def test_nondim_tq_validation():
    with pytest.raises(ValidationError):
        NondimTQ.from_fractions(0.5, 0.5, 0.5, 0.01)
    with pytest.raises(ValidationError, match="eps"):
        NondimTQ.from_fractions(0.2, 0.3, 0.5, 0.3)


def test_nondim_hta_allows_equal_kappa_lam_but_not_larger_lam():
    NondimHTA(1.0, 1.0, 0.1)
    with pytest.raises(ValidationError, match="lam"):
        NondimHTA(1.0, 1.5, 0.1)


def test_carr_parameters():
    p = carr_parameters(0.3, 0.01)
    assert p.kappa == 1.0 and p.lam == pytest.approx(0.7)
    assert p.kappa - p.lam == pytest.approx(0.3)
    with pytest.raises(ValidationError):
        carr_parameters(1.2, 0.01)


def test_check_state(fig3_left):
    tot = fig3_left.totals
    check_state(StateMM(0.5, 0.2), tot)
    check_state(StateLumped(0.9, 0.3), tot)
    with pytest.raises(ValidationError, match="C"):
        check_state(StateMM(0.2, 1.5), tot)
    with pytest.raises(ValidationError, match="X"):
        check_state(StateMM(-0.1, 0.0), tot)
    with pytest.raises(ValidationError, match="Xbar"):
        check_state(StateLumped(1.5, 0.0), tot)


def test_conservation_two_and_four_state(fig3_left):
    cfg = SolverConfig(rtol=1e-8, atol=1e-10)
    for extended in (False, True):
        traj = integrate(full_mm_problem(fig3_left, 20.0, extended=extended), cfg)
        sub, enz = conservation_residuals(traj, fig3_left.rates, fig3_left.totals)
        assert sub <= 1e-6 and enz <= 1e-6


def test_conservation_detects_violation(fig3_left):
    cfg = SolverConfig(rtol=1e-8, atol=1e-10)
    traj = integrate(full_mm_problem(fig3_left, 5.0, extended=True), cfg)
    bad = type(traj)(traj.times, traj.states * [1.0, 1.0, 1.01, 1.0], traj.derivs)
    assert conservation_residuals(bad, fig3_left.rates, fig3_left.totals)[1] > 1e-3


def test_parameter_set_as_dict(fig3_left):
    assert fig3_left.as_dict() == {"k1": 1.0, "k_minus1": 3.0, "k2": 1.0, "E_T": 1.0, "X_T": 1.0}
    assert math.isclose(fig3_left.derived.eps_TQ, fig3_left.tq.eps)
