import numpy as np
import pytest

from qssa_cm import _kernels as K
from qssa_cm.kinetics import NondimHTA
from qssa_cm.models import TimeFrame, hta_problem
from qssa_cm.solver import (EXPLICIT, IMPLICIT, IntegrationError, KernelRHS, OdeProblem,
                            SolverConfig, Trajectory, integrate, sample)

from oracles import radau

METHODS = (EXPLICIT, IMPLICIT)


@pytest.mark.parametrize("method", METHODS)
def test_exponential_decay(method):
    prob = OdeProblem(KernelRHS(K.LINEAR, (1.0,)), 0.0, 5.0, [1.0])
    traj = integrate(prob, SolverConfig(method=method, rtol=1e-9, atol=1e-12))
    assert traj.t_end == 5.0
    assert abs(traj.y_end[0] - np.exp(-5.0)) < 1e-9
    err = np.abs(traj.states[:, 0] - np.exp(-traj.times))
    assert err.max() < 1e-8


@pytest.mark.parametrize("method", METHODS)
def test_logistic_against_closed_form(method):
    r, cap, y0 = 2.0, 3.0, 0.1
    prob = OdeProblem(KernelRHS(K.LOGISTIC, (r, cap)), 0.0, 6.0, [y0])
    traj = integrate(prob, SolverConfig(method=method, rtol=1e-10, atol=1e-12))
    t = traj.times
    exact = cap / (1 + (cap / y0 - 1) * np.exp(-r * t))
    assert np.max(np.abs(traj.states[:, 0] - exact)) < 1e-8


@pytest.mark.parametrize("method", METHODS)
def test_error_shrinks_with_tolerance(method):
    prob = OdeProblem(KernelRHS(K.LINEAR, (3.0,)), 0.0, 2.0, [1.0])
    errs = [abs(integrate(prob, SolverConfig(method=method, rtol=tol, atol=tol * 1e-3)).y_end[0]
                - np.exp(-6.0)) for tol in (1e-4, 1e-7, 1e-10)]
    assert errs[0] > errs[1] > errs[2]


def test_stiff_inner_hta_needs_implicit():
    p = NondimHTA(1.0, 0.5, 1e-6)
    prob = hta_problem(p, 1e6, frame=TimeFrame.INNER)
    traj = integrate(prob, SolverConfig(method=IMPLICIT, rtol=1e-6, atol=1e-9))
    assert traj.stats.steps < 5000
    # s = 1e6 is tau = 1 in the slow time
    outer = integrate(hta_problem(p, 1.0), SolverConfig(method=IMPLICIT, rtol=1e-10, atol=1e-12))
    assert abs(traj.y_end[0] - outer.y_end[0]) < 1e-5
    with pytest.raises(IntegrationError) as err:
        integrate(prob, SolverConfig(method=EXPLICIT, rtol=1e-6, atol=1e-9, max_steps=2000))
    assert err.value.reason == "maximum number of steps exceeded"
    partial = err.value.partial
    assert partial.t_end == err.value.t_last
    assert 0 < err.value.t_last < 1e6


def test_prothero_robinson_implicit():
    lam = -1e6

    def rhs(t, y):
        return np.array([lam * (y[0] - np.cos(t)) - np.sin(t)])

    traj = integrate(OdeProblem(rhs, 0.0, 2.0, [1.0]),
                     SolverConfig(method=IMPLICIT, rtol=1e-8, atol=1e-10))
    assert np.max(np.abs(traj.states[:, 0] - np.cos(traj.times))) < 1e-7
    assert traj.stats.steps < 2000


def test_van_der_pol_against_radau():
    mu = 50.0

    def rhs(t, y):
        return np.array([y[1], mu * (1 - y[0] ** 2) * y[1] - y[0]])

    t_eval = np.linspace(0, 20, 21)
    ref = radau(lambda t, y: rhs(t, y), 20.0, [2.0, 0.0], t_eval, rtol=1e-12, atol=1e-12)
    for method in METHODS:
        traj = integrate(OdeProblem(rhs, 0.0, 20.0, [2.0, 0.0]),
                         SolverConfig(method=method, rtol=1e-10, atol=1e-10))
        assert np.max(np.abs(sample(traj, t_eval)[:, 0] - ref[:, 0])) < 1e-5


@pytest.mark.parametrize("method", METHODS)
def test_callable_and_kernel_agree_bitwise(method):
    kern = KernelRHS(K.FULL_MM, (1.0, 3.0, 1.0, 1.0))
    cfg = SolverConfig(method=method, rtol=1e-8, atol=1e-10)
    a = integrate(OdeProblem(kern, 0.0, 5.0, [1.0, 0.0]), cfg)
    b = integrate(OdeProblem(lambda t, y: kern(t, y), 0.0, 5.0, [1.0, 0.0]), cfg)
    c = integrate(OdeProblem(kern, 0.0, 5.0, [1.0, 0.0]), cfg, accelerate=False)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, c.times) and np.array_equal(a.states, c.states)


def test_nonfinite_rhs_raises():
    def rhs(t, y):
        return np.array([np.nan if t > 0.5 else -y[0]])

    with pytest.raises(IntegrationError) as err:
        integrate(OdeProblem(rhs, 0.0, 1.0, [1.0]))
    assert err.value.t_last <= 0.5


def test_blowup_raises():
    # y' = y^2 from 1 blows up at t = 1
    def rhs(t, y):
        return y * y

    with pytest.raises(IntegrationError) as err, np.errstate(over="ignore", invalid="ignore"):
        integrate(OdeProblem(rhs, 0.0, 2.0, [1.0]), SolverConfig(max_steps=20_000))
    assert err.value.t_last <= 1.0 + 1e-6
    assert np.all(np.diff(err.value.partial.times) > 0)


def test_sample_hermite():
    prob = OdeProblem(KernelRHS(K.LINEAR, (1.0,)), 0.0, 3.0, [1.0])
    traj = integrate(prob, SolverConfig(rtol=1e-10, atol=1e-12))
    t = np.linspace(0, 3, 301)
    assert np.max(np.abs(sample(traj, t)[:, 0] - np.exp(-t))) < 1e-6
    assert np.array_equal(sample(traj, traj.times), traj.states)
    assert sample(traj, 1.5).shape == (1,)
    with pytest.raises(ValueError):
        sample(traj, [3.1])
    with pytest.raises(ValueError):
        sample(traj, [-0.1])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="rk4")
    with pytest.raises(ValueError):
        SolverConfig(rtol=0)
    with pytest.raises(ValueError):
        SolverConfig(atol=-1)
    with pytest.raises(ValueError):
        SolverConfig(max_steps=0)
    assert SolverConfig().replace(rtol=1e-6).rtol == 1e-6


def test_problem_validation():
    with pytest.raises(ValueError):
        OdeProblem(KernelRHS(K.FULL_MM, (1, 1, 1, 1)), 0.0, 1.0, [1.0])
    with pytest.raises(ValueError):
        OdeProblem(KernelRHS(K.LINEAR, (1,)), 1.0, 1.0, [1.0])
    with pytest.raises(ValueError):
        OdeProblem(KernelRHS(K.LINEAR, (1,)), 0.0, 1.0, [np.nan])
    with pytest.raises(ValueError):
        integrate(OdeProblem(lambda t, y: np.zeros(3), 0.0, 1.0, [1.0, 2.0]))


def test_trajectory_requires_increasing_times():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [[1.0], [1.0]], [[0.0], [0.0]])


def test_stats_are_counted():
    prob = OdeProblem(KernelRHS(K.LINEAR, (1.0,)), 0.0, 1.0, [1.0])
    traj = integrate(prob)
    assert traj.stats.accepted == len(traj) - 1
    assert traj.stats.rhs_evals >= 6 * traj.stats.accepted
    assert traj.stats.max_error_ratio <= 1.0
