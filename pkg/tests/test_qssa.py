import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qssa_cm import _kernels as K
from qssa_cm.cli.config import BUILTIN
from qssa_cm.kinetics import NondimHTA, NondimTQ, ParameterSet
from qssa_cm.models import GeneralSP, hta_system, tq_system
from qssa_cm.qssa import (RootError, cminus, cminus_residual, root_function, solve_reduced,
                          sqssa_complex, sqssa_reduced_rhs, sqssa_v, tihonov_root,
                          tq_root_nondim, tqssa_reduced_rhs)
from qssa_cm.solver import KernelRHS, OdeProblem, SolverConfig, integrate, sample

from oracles import full_mm, naive_cminus, radau, tqssa

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_sqssa_values(fig3_left):
    assert sqssa_complex(0.0, 1.0, 4.0) == 0.0
    assert sqssa_v(1.0, 1.0) == 0.5
    assert sqssa_complex(1e12, 2.0, 4.0) == pytest.approx(2.0, rel=1e-10)
    assert sqssa_reduced_rhs(1.0, fig3_left.rates, fig3_left.totals) == pytest.approx(-0.2)
    assert sqssa_reduced_rhs(0.0, fig3_left.rates, fig3_left.totals) == 0.0
    assert sqssa_reduced_rhs(1e9, fig3_left.rates, fig3_left.totals) == pytest.approx(-1.0, rel=1e-8)


def test_cminus_values(fig3_left):
    assert cminus(0.0, 1.0, 4.0) == 0.0
    assert cminus(3.0, 0.0, 4.0) == 0.0
    assert cminus(1.0, 1.0, 4.0) == pytest.approx((6 - math.sqrt(32)) / 2, rel=1e-15)
    assert cminus(1.0, 1.0, 4.0) == pytest.approx(0.171573, abs=1e-6)
    assert tqssa_reduced_rhs(1.0, fig3_left.rates, fig3_left.totals) == pytest.approx(-0.171573, abs=1e-6)
    assert tqssa_reduced_rhs(1e10, fig3_left.rates, fig3_left.totals) == pytest.approx(-1.0, rel=1e-8)


def test_cminus_negative_discriminant_guard():
    with pytest.raises(ArithmeticError):
        cminus(1.0, 1.0, -3.0)


@given(st.floats(0, 1e3), positive, positive)
@settings(max_examples=500, deadline=None)
def test_cminus_residual_and_bounds(xbar, e_t, k_m):
    c = cminus(xbar, e_t, k_m)
    res, scale = cminus_residual(xbar, c, e_t, k_m)
    assert abs(res) <= 1e-10 * scale
    assert 0.0 <= c <= min(e_t, xbar) * (1 + 1e-14)


@given(positive, positive)
@settings(max_examples=200, deadline=None)
def test_cminus_monotone(e_t, k_m):
    x = np.linspace(0, 50, 200)
    assert np.all(np.diff(cminus(x, e_t, k_m)) > 0)


def test_cminus_stable_where_naive_cancels():
    # 4 E_T Xbar << B^2: the naive difference loses most digits
    xbar, e_t, k_m = 1e-6, 1e-6, 1e6
    exact = e_t * xbar / (e_t + k_m + xbar)  # leading term, next term is O(1e-30)
    assert cminus(xbar, e_t, k_m) == pytest.approx(exact, rel=1e-12)
    assert abs(naive_cminus(xbar, e_t, k_m) - exact) / exact > 1e-6


def test_tq_root_values():
    p = NondimTQ.from_fractions(1 / 6, 1 / 6, 2 / 3, 0.01)
    assert tq_root_nondim(0.0, p) == 0.0
    v = tq_root_nondim(1.0, p)
    assert v == pytest.approx(1.029437, abs=1e-6)
    assert v / 6 == pytest.approx(cminus(1.0, 1.0, 4.0), rel=1e-12)
    u = np.array([1e-4, 1e-5])
    assert np.allclose(tq_root_nondim(u, p), u / (p.eta + p.kappa_m + p.sigma * u), rtol=1e-3)


def test_tq_root_cross_checks_cminus(rng):
    worst = 0.0
    for _ in range(1000):
        k1, km1, k2, e_t, x_t = np.exp(rng.uniform(-3, 3, 5))
        params = ParameterSet.of(k1, km1, k2, e_t, x_t)
        p = params.tq
        u = rng.uniform(0, 1)
        c = tq_root_nondim(u, p) * p.c_scale
        ref = cminus(u * x_t, e_t, params.derived.K_M)
        if ref > 0:
            worst = max(worst, abs(c - ref) / ref)
    assert worst < 1e-9


def test_tihonov_root_hta():
    sp = hta_system(NondimHTA(1.0, 0.5, 0.1))
    r = tihonov_root(sp, 1.0)
    assert r.v == pytest.approx(0.5, abs=1e-12)
    assert r.value == pytest.approx(1.0 - 0.5, abs=1e-12)
    assert r.stable and r.derivative < 0
    assert abs(r.residual) <= 1e-10
    z = tihonov_root(sp, 0.0)
    assert z.value == 0.0 and z.v == 0.0


def test_tihonov_root_tq():
    sp = tq_system(NondimTQ.from_fractions(1 / 6, 1 / 6, 2 / 3, 0.01))
    assert tihonov_root(sp, 1.0).v == pytest.approx(1.0294372515228596, abs=1e-9)


def test_tihonov_root_reproduces_closed_forms(rng):
    for _ in range(200):
        kappa = rng.uniform(0.2, 5)
        hp = NondimHTA(kappa, kappa * rng.uniform(0, 1), 0.1)
        s, e = rng.uniform(0.05, 0.45, 2)
        tp = NondimTQ.from_fractions(s, e, 1 - s - e, 0.01)
        u = rng.uniform(0, 1)
        assert tihonov_root(hta_system(hp), u).v == pytest.approx(sqssa_v(u, kappa), abs=1e-9)
        assert tihonov_root(tq_system(tp), u).v == pytest.approx(tq_root_nondim(u, tp), abs=1e-9)


def test_tihonov_root_with_guess_and_unstable_branch():
    # g = -v + v^3 has roots 0 (stable at u = 0) and +-1 (unstable)
    sp = GeneralSP(0.0, -1.0, lambda u, v: -v, lambda u, v: v ** 3)
    assert tihonov_root(sp, 0.3).stable
    r = tihonov_root(sp, 0.3, guess=1.2)
    assert r.v == pytest.approx(1.0, abs=1e-10)
    assert not r.stable


def test_tihonov_root_failures():
    # g = u - v + v^2 has no real root once u > 1/4
    sp = GeneralSP(1.0, -1.0, lambda u, v: -v, lambda u, v: v * v)
    assert tihonov_root(sp, 0.2).v == pytest.approx((1 - math.sqrt(1 - 0.8)) / 2, abs=1e-12)
    with pytest.raises(RootError) as err:
        tihonov_root(sp, 1.0)
    assert np.isfinite(err.value.last)


def test_solve_reduced_root_relation(fig3_left):
    red = solve_reduced("tqssa", fig3_left, T=10.0)
    assert red.slow[0] == fig3_left.totals.X_T
    res, scale = cminus_residual(red.slow, red.fast, 1.0, 4.0)
    assert np.all(np.abs(res) <= 1e-10 * scale)
    sq = solve_reduced("sqssa", fig3_left, T=10.0)
    assert np.all(np.diff(sq.slow) < 0)
    assert np.allclose(sq.fast, sqssa_complex(sq.slow, 1.0, 4.0), rtol=1e-15)


def test_solve_reduced_general_matches_closed_form():
    p = NondimHTA(2.0, 1.0, 0.01)
    cfg = SolverConfig(rtol=1e-10, atol=1e-12)
    a = solve_reduced("hta", p, T=3.0, config=cfg)
    b = solve_reduced("general", hta_system(p), T=3.0, config=cfg)
    assert a.slow[-1] == pytest.approx(b.slow[-1], rel=1e-8)
    assert np.allclose(b.fast, root_function("hta", p)(b.slow), atol=1e-9)


def test_solve_reduced_frozen_kinetics():
    # k2 = 0: no product forms, the reduced slow variable stays put
    traj = integrate(OdeProblem(KernelRHS(K.TQSSA_REDUCED, (0.0, 1.0, 3.0)), 0.0, 5.0, [2.0]))
    assert np.all(traj.states[:, 0] == 2.0)


def test_solve_reduced_errors(fig3_left):
    with pytest.raises(ValueError):
        solve_reduced("mm", fig3_left, T=1.0)
    with pytest.raises(TypeError):
        solve_reduced("hta", fig3_left, T=1.0)
    with pytest.raises(ValueError):
        solve_reduced("sqssa", fig3_left)


def test_sqssa_converges_on_fig2_left():
    params = BUILTIN["fig2_left"].params
    r, tot = params.rates, params.totals
    T = BUILTIN["fig2_left"].T
    t = np.linspace(0.0, T, 60)[1:]
    ref = radau(full_mm(r.k1, r.k_minus1, r.k2, tot.E_T), T, [tot.X_T, 0.0], t)
    red = solve_reduced("sqssa", params, T=T, config=SolverConfig(rtol=1e-10, atol=1e-12))
    x = np.interp(t, red.times, red.slow)
    assert np.max(np.abs(x - ref[:, 0])) < 1e-2 * tot.X_T


def test_tqssa_fig1_deviation_matches_oracle():
    # frozen oracle value for the fig1_consistent set: 3.287% of X_T near t = 0.05
    sc = BUILTIN["fig1_consistent"]
    params, T = sc.params, sc.T
    r, tot = params.rates, params.totals
    t = np.linspace(0.0, 0.5, 5001)
    full = radau(full_mm(r.k1, r.k_minus1, r.k2, tot.E_T), T, [tot.X_T, 0.0], t, rtol=1e-10, atol=1e-12)
    red = radau(tqssa(r.k1, r.k_minus1, r.k2, tot.E_T), T, [tot.X_T], t, rtol=1e-10, atol=1e-12)
    dev = np.abs(red[:, 0] - full.sum(axis=1)) / tot.X_T
    assert dev.max() == pytest.approx(0.03287, abs=2e-5)
    assert 0.04 < t[np.argmax(dev)] < 0.06
    ours = solve_reduced("tqssa", params, T=T, config=SolverConfig(rtol=1e-10, atol=1e-12))
    assert np.allclose(sample(ours.trajectory, t)[:, 0], red[:, 0], rtol=1e-7, atol=1e-6)
