"""Numerical checks of the Tihonov reduction and the slow-phase K_W limit.

Boundary-layer convergence to the stable root, mu-tube confinement of full
trajectories, first-order convergence of the full solution to the reduced one
as eps -> 0, the E X / C slow-phase asymptote, and deviation metrics of the
QSSA closures against the full system.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import manifold
from .kinetics import NondimHTA, NondimTQ, ParameterSet, RateConstants, Totals
from .models import GeneralSP, TimeFrame, hta_problem, tq_problem
from .qssa import ReducedSolution, cminus, solve_reduced, tihonov_root, tq_root_nondim, sqssa_v
from .solver import IntegrationError, OdeProblem, SolverConfig, Trajectory, integrate, sample

SWEEP_CONFIG = SolverConfig(rtol=1e-10, atol=1e-12, max_steps=2_000_000)
TUBE_CONFIG = SolverConfig(method="implicit_stiff", rtol=1e-8, atol=1e-10, max_steps=1_000_000)


class BoundaryLayer(NamedTuple):
    converged: bool
    limit: float
    root: float


def boundary_layer_converges(sp: GeneralSP, alpha, beta, tau_max, tol=1e-8,
                             config: SolverConfig | None = None) -> BoundaryLayer:
    """Does the layer flow dy/dtau = g(alpha, y), y(0) = beta, settle on the root?

    Converged means |y(tau_max) - root| < tol and |dy/dtau| never grows over
    the final decade [tau_max/10, tau_max].
    """
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    found = tihonov_root(sp, alpha)
    root = found.v
    beta = float(beta)
    scale = max(abs(root), abs(beta), 1.0)
    if abs(sp.g(alpha, beta)) <= 1e-15 * scale:
        return BoundaryLayer(abs(beta - root) < tol, beta, root)

    def rhs(t, y):
        return np.array([sp.g(alpha, y[0])])

    config = config or SolverConfig(rtol=1e-10, atol=1e-13)
    try:
        traj = integrate(OdeProblem(rhs, 0.0, tau_max, [beta]), config)
    except IntegrationError as err:
        last = err.partial.y_end[0] if err.partial is not None else beta
        return BoundaryLayer(False, float(last), root)
    limit = float(traj.y_end[0])
    if not np.isfinite(limit):
        return BoundaryLayer(False, limit, root)
    tail = traj.times >= tau_max / 10.0
    speed = np.abs(traj.derivs[tail, 0])
    # below the solver's own tolerance floor the speed is noise, not growth
    noise = 10.0 * (config.rtol * abs(root) + config.atol)
    floor = max(1e-3 * tol, noise) * max(abs(found.derivative), 1.0)
    monotone = bool(np.all((np.diff(speed) <= 1e-12 * speed[:-1]) | (speed[1:] <= floor)))
    return BoundaryLayer(abs(limit - root) < tol and monotone, limit, root)


class TubeError(ValueError):
    """The trajectory is not inside the mu-tube at the requested entry time."""


def tube_distance(traj: Trajectory, root, times, slow_index=0, fast_index=1):
    states = sample(traj, times)
    return np.abs(states[:, fast_index] - np.asarray(root(states[:, slow_index]), dtype=float))


def _check_times(traj, times):
    return np.union1d(traj.times[(traj.times >= times[0]) & (traj.times <= times[-1])], times)


def tube_entry_time(traj: Trajectory, root, mu, slow_index=0, fast_index=1):
    """First stored time at which the trajectory is strictly inside the mu-tube."""
    dist = np.abs(traj.states[:, fast_index] - root(traj.states[:, slow_index]))
    inside = np.nonzero(dist < mu)[0]
    if inside.size == 0:
        return None
    return float(traj.times[inside[0]])


def mu_tube_check(traj: Trajectory, root, mu, entry_time, T, slow_index=0, fast_index=1,
                  n_dense=2001) -> bool:
    """True iff |y - root(x)| < mu at every check time in [entry_time, T].

    Check times are the stored steps in the window plus ``n_dense`` uniform
    points (Hermite-interpolated).
    """
    if not (traj.t0 <= entry_time < T <= traj.t_end):
        raise ValueError(f"trajectory must cover [{entry_time}, {T}]")
    at_entry = tube_distance(traj, root, [entry_time], slow_index, fast_index)[0]
    if not at_entry < mu:
        raise TubeError(f"distance {at_entry:.3e} >= mu={mu} at entry time {entry_time}")
    times = _check_times(traj, np.linspace(entry_time, T, n_dense))
    return bool(np.all(tube_distance(traj, root, times, slow_index, fast_index) < mu))


class TubeTrial(NamedTuple):
    kappa: float
    lam: float
    entry_time: float
    horizon: float
    confined: bool


def hta_tube_trial(kappa, lam, eps=1e-3, mu=0.05, T=None, config=TUBE_CONFIG) -> TubeTrial:
    """Integrate the HTA system from (1, 0) and check confinement after entry."""
    p = NondimHTA(kappa, lam, eps)
    T = slow_horizon("hta", p) if T is None else T
    traj = integrate(hta_problem(p, T), config)
    root = lambda u: sqssa_v(u, kappa)  # noqa: E731
    entry = tube_entry_time(traj, root, mu)
    if entry is None or entry >= T:
        return TubeTrial(kappa, lam, np.nan, T, False)
    return TubeTrial(kappa, lam, entry, T, mu_tube_check(traj, root, mu, entry, T))


def slow_horizon(model, p, n_constants=3.0):
    """n slow-time constants u0/|du/dtau| of the reduced equation at u0 = 1."""
    if model == "hta":
        return n_constants * (p.kappa + 1.0) / p.lam
    if model == "tq":
        return n_constants / tq_root_nondim(1.0, p)
    raise ValueError(f"model must be 'hta' or 'tq', got {model!r}")


@dataclass(frozen=True)
class SweepReport:
    model: str
    eps: np.ndarray
    slow_errors: np.ndarray     # sup |x - x0| on [0, T]
    fast_errors: np.ndarray     # sup |y - y0| on [t1, T]
    t1: np.ndarray
    T: float
    slope: float
    fast_slope: float

    def strictly_decreasing(self, which="slow"):
        err = self.slow_errors if which == "slow" else self.fast_errors
        return bool(np.all(np.diff(err) < 0))


class SweepError(RuntimeError):
    def __init__(self, message, partial: SweepReport):
        super().__init__(message)
        self.partial = partial


def _sweep_one(model, base, eps, T, t1, config, n_dense):
    if model == "hta":
        p = replace(base, eps=eps)
        full = integrate(hta_problem(p, T, frame=TimeFrame.OUTER), config)
    else:
        p = replace(base, eps=eps)
        full = integrate(tq_problem(p, T, frame=TimeFrame.OUTER), config)
    red = solve_reduced(model, p, 1.0, T, config.replace(method="explicit_adaptive"))
    root = reduced_root(model, p)
    grid = _check_times(full, np.linspace(0.0, T, n_dense))
    x = sample(full, grid)
    x0 = sample(red.trajectory, grid)[:, 0]
    slow_err = float(np.max(np.abs(x[:, 0] - x0)))
    late = grid >= t1
    fast_err = float(np.max(np.abs(x[late, 1] - root(x0[late]))))
    return slow_err, fast_err


def reduced_root(model, p):
    """Tihonov root y0 = phi(x0) of the HTA or total-QSSA fast equation."""
    if model == "hta":
        return lambda u: sqssa_v(u, p.kappa)
    return lambda u: tq_root_nondim(u, p)


def epsilon_sweep(model="hta", base=None, eps_list=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3), T=None,
                  t1=None, config: SolverConfig | None = None, n_dense=4001,
                  workers=1) -> SweepReport:
    """Full-vs-reduced errors for each eps (outer time).

    ``base`` defaults to HTA kappa = 1, lam = 0.5 (total QSSA: sigma = eta = 1/6,
    kappa_m = 2/3).  ``t1`` defaults to 5 eps per run.  Runs may use a thread pool
    (``workers``); results are assembled in ``eps_list`` order.
    """
    if model not in ("hta", "tq"):
        raise ValueError(f"model must be 'hta' or 'tq', got {model!r}")
    eps = np.asarray(eps_list, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_list must be positive and strictly decreasing")
    if base is None:
        base = (NondimHTA(1.0, 0.5, eps[0]) if model == "hta"
                else NondimTQ.from_fractions(1 / 6, 1 / 6, 2 / 3, eps[0]))
    T = slow_horizon(model, base) if T is None else float(T)
    t1s = 5.0 * eps if t1 is None else np.full(eps.size, float(t1))
    config = config or SWEEP_CONFIG

    def run(i):
        return _sweep_one(model, base, eps[i], T, t1s[i], config, n_dense)

    slow = np.full(eps.size, np.nan)
    fast = np.full(eps.size, np.nan)

    def partial(n):
        return SweepReport(model, eps[:n], slow[:n], fast[:n], t1s[:n], T, np.nan, np.nan)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(run, i) for i in range(eps.size)]
        for i, fut in enumerate(futures):
            try:
                slow[i], fast[i] = fut.result()
            except IntegrationError as err:
                raise SweepError(f"eps={eps[i]:g}: {err}", partial(i)) from err
    return SweepReport(model, eps, slow, fast, t1s, T,
                       manifold.fit_order(eps, slow), manifold.fit_order(eps, fast))


# K_W: slow-phase limit of E X / C

def kw_constants(rates: RateConstants, totals: Totals):
    """(alpha, K_W) for the late exponential decay of the full system.

    alpha is the smaller root of x^2 - k1 (K_M + E_T) x + k1 k2 E_T, written
    without cancellation; K_W = (k2 - alpha) E_T / alpha = K_M - alpha / k1.
    """
    k1, k2, e_t = rates.k1, rates.k2, totals.E_T
    k_m = (rates.k_minus1 + k2) / k1
    m = k_m + e_t
    s = math.sqrt(1.0 - 4.0 * k2 * e_t / (k1 * m * m))
    alpha = 2.0 * k2 * e_t / (m * (1.0 + s))
    return alpha, k_m - alpha / k1


@dataclass(frozen=True)
class KwReport:
    alpha: float
    K_W: float
    K_D: float
    K_M: float
    empirical_limit: float
    relative_gap: float
    window: tuple

    @property
    def bracket_ok(self):
        return self.K_D < self.K_W < self.K_M


class InsufficientDataError(ValueError):
    pass


def kw_analysis(rates: RateConstants, totals: Totals, traj: Trajectory, n_grid=1000,
                threshold=0.01, tail=0.1) -> KwReport:
    """Closed-form K_W against the late-time E X / C of a full-system run.

    The run is resampled on ``n_grid`` uniform times; the empirical limit is
    the mean of E X / C over the last ``tail`` fraction of samples whose C is
    above ``threshold`` times its peak.
    """
    alpha, k_w = kw_constants(rates, totals)
    k_m = (rates.k_minus1 + rates.k2) / rates.k1
    k_d = rates.k_minus1 / rates.k1
    grid = np.linspace(traj.t0, traj.t_end, n_grid)
    y = sample(traj, grid)
    x, c = y[:, 0], y[:, 1]
    e = y[:, 2] if y.shape[1] >= 4 else totals.E_T - c
    idx = np.nonzero(c > threshold * np.max(c))[0]
    if idx.size < 2 or np.max(c) <= 0:
        raise InsufficientDataError("complex never rises above the slow-phase threshold")
    win = idx[-max(1, int(round(tail * idx.size))):]
    empirical = float(np.mean(e[win] * x[win] / c[win]))
    return KwReport(alpha, k_w, k_d, k_m, empirical, abs(empirical - k_w) / k_w,
                    (float(grid[win[0]]), float(grid[win[-1]])))


# deviation metrics of the closures against the full system

def deviation_metrics(times, reference, approx, t_split):
    """Max and RMS |approx - reference| overall, before and after ``t_split``."""
    times = np.asarray(times, dtype=float)
    d = np.abs(np.asarray(approx, dtype=float) - np.asarray(reference, dtype=float))

    def stats(mask):
        if not np.any(mask):
            return {"max": 0.0, "rms": 0.0}
        return {"max": float(np.max(d[mask])), "rms": float(np.sqrt(np.mean(d[mask] ** 2)))}

    return {"all": stats(np.ones_like(d, dtype=bool)), "transient": stats(times <= t_split),
            "slow_phase": stats(times >= t_split)}


def transient_end(times, c, fraction=0.95):
    """First time the complex reaches ``fraction`` of its peak."""
    c = np.asarray(c)
    return float(times[np.argmax(c >= fraction * np.max(c))])


def tq_cm_reconstructions(params: ParameterSet):
    """Zeroth (eps = 0) and first order total-QSSA manifold complexes, Xbar -> C."""
    tq = params.tq
    coeffs = manifold.coeffs_closed_form("tq", tq)

    def order(eps):
        return lambda xbar: manifold.reconstruct_v(coeffs, np.asarray(xbar) / tq.x_scale,
                                                   eps) * tq.c_scale

    return {"cm0": order(0.0), "cm1": order(tq.eps)}


def hta_cm_reconstructions(params: ParameterSet):
    """Zeroth and first order HTA manifold complexes, X -> C."""
    hta = params.hta
    coeffs = manifold.coeffs_closed_form("hta", hta)

    def order(eps):
        return lambda x: manifold.reconstruct_v(coeffs, np.asarray(x) / hta.x_scale,
                                                eps) * hta.c_scale

    return {"cm0": order(0.0), "cm1": order(hta.eps)}


@dataclass(frozen=True)
class ApproximationReport:
    t_transient: float
    horizon: float
    metrics: dict


def approximation_report(full: Trajectory, sqssa: ReducedSolution, tqssa: ReducedSolution,
                         params: ParameterSet, cm_orders=None, cm_argument="Xbar", n_dense=2001):
    """Deviations of sQSSA, tQSSA and manifold reconstructions from a full (X, C) run.

    Time series are compared on the stored full-run times plus a uniform grid
    over the common window.  Manifold reconstructions (callables of Xbar, or of
    X when ``cm_argument`` is "X") are compared in the phase plane: at each
    full-run state against the full C and against the matching QSSA curve
    (tQSSA for Xbar, sQSSA for X).
    """
    if cm_argument not in ("Xbar", "X"):
        raise ValueError("cm_argument must be 'Xbar' or 'X'")
    for name, red in (("sqssa", sqssa), ("tqssa", tqssa)):
        if red.params != params:
            raise ValueError(f"{name} solution was computed for a different parameter set")
    horizon = min(full.t_end, sqssa.trajectory.t_end, tqssa.trajectory.t_end)
    times = _check_times(full, np.linspace(full.t0, horizon, n_dense))
    y = sample(full, times)
    x, c = y[:, 0], y[:, 1]
    xbar = x + c
    t_split = transient_end(times, c)
    xs = sample(sqssa.trajectory, times)[:, 0]
    xt = sample(tqssa.trajectory, times)[:, 0]
    e_t, k_m = params.totals.E_T, params.derived.K_M
    cs = _closure_complex(sqssa, times, xs, e_t, k_m)
    ct = _closure_complex(tqssa, times, xt, e_t, k_m)
    metrics = {
        "sqssa": {"slow": deviation_metrics(times, x, xs, t_split),
                  "complex": deviation_metrics(times, c, cs, t_split)},
        "tqssa": {"slow": deviation_metrics(times, xbar, xt, t_split),
                  "complex": deviation_metrics(times, c, ct, t_split)},
    }
    arg = xbar if cm_argument == "Xbar" else x
    curve = cminus(xbar, e_t, k_m) if cm_argument == "Xbar" else e_t * x / (x + k_m)
    for name, fn in (cm_orders or {}).items():
        cm = np.asarray(fn(arg), dtype=float)
        metrics[name] = {"phase_plane": deviation_metrics(times, c, cm, t_split),
                         "vs_qssa_curve": deviation_metrics(times, curve, cm, t_split)}
    return ApproximationReport(t_split, float(horizon), metrics)


def _closure_complex(red: ReducedSolution, times, slow, e_t, k_m):
    # the closures are algebraic, so rebuild C from the resampled slow values
    if red.kind == "sqssa":
        return e_t * slow / (slow + k_m)
    if red.kind == "tqssa":
        return np.asarray(cminus(slow, e_t, k_m))
    return np.interp(times, red.times, red.fast)
