"""Adaptive integration loops.

Both loops evaluate the right-hand side through the module-global
``eval_rhs(model, t, y, p, out)``.  Under numba that is the compiled model
dispatch; :func:`python_loop` rebinds the global to an adapter so the very
same code drives arbitrary Python callables.
"""
import types

import numpy as np

from . import _accel
from ._accel import jit
from ._kernels import eval_rhs, pure_eval_rhs

OK = 0
MAX_STEPS = 1
NEWTON_DIVERGED = 2
NONFINITE = 3
STEP_UNDERFLOW = 4

STATUS_TEXT = {
    OK: "ok",
    MAX_STEPS: "maximum number of steps exceeded",
    NEWTON_DIVERGED: "Newton iteration diverged",
    NONFINITE: "non-finite right-hand side",
    STEP_UNDERFLOW: "step size underflow",
}

EPS = 2.220446049250313e-16
SQRT_EPS = 1.4901161193847656e-08
GAMMA = 1.0 - 1.0 / np.sqrt(2.0)  # SDIRK2 (Alexander), L-stable and stiffly accurate
MAX_NEWTON = 10
SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0

# Dormand-Prince 5(4)
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
PI_ALPHA = 0.17  # 1/5 - 0.75 * PI_BETA
PI_BETA = 0.04


@jit
def _all_finite(x):
    for i in range(x.shape[0]):
        if not np.isfinite(x[i]):
            return False
    return True


@jit
def _grow(times, states, derivs):
    n, d = states.shape
    t2 = np.empty(2 * n)
    s2 = np.empty((2 * n, d))
    d2 = np.empty((2 * n, d))
    t2[:n] = times
    s2[:n] = states
    d2[:n] = derivs
    return t2, s2, d2


@jit
def _initial_step(model, p, t0, y0, f0, rtol, atol, order, h_max):
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, h_max)
    y1 = y0 + h0 * f0
    f1 = np.empty(n)
    eval_rhs(model, t0 + h0, y1, p, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    dmax = max(d1, d2)
    if not np.isfinite(dmax):
        return h0
    if dmax <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dmax) ** (1.0 / (order + 1.0))
    return min(100.0 * h0, h1, h_max)


@jit
def dopri_loop(model, p, t0, t_end, y0, rtol, atol, h_init, h_max, max_steps):
    n = y0.shape[0]
    cap = 256
    times = np.empty(cap)
    states = np.empty((cap, n))
    derivs = np.empty((cap, n))
    # accepted, rejected, rhs evaluations, newton failures, max accepted error ratio
    stats = np.zeros(5)

    y = y0.copy()
    t = t0
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ynew = np.empty(n)
    eval_rhs(model, t, y, p, k1)
    stats[2] += 1
    times[0] = t
    states[0] = y
    derivs[0] = k1
    count = 1
    if not _all_finite(k1):
        return times[:count], states[:count], derivs[:count], stats, NONFINITE, t

    if h_init > 0.0:
        h = min(h_init, h_max)
    else:
        h = _initial_step(model, p, t, y, k1, rtol, atol, 4.0, h_max)
        stats[2] += 1

    status = OK
    err_prev = 1e-4
    rejected_last = False
    attempts = 0
    while t < t_end:
        if attempts >= max_steps:
            status = MAX_STEPS
            break
        attempts += 1
        h_min = 16.0 * EPS * max(abs(t), abs(t_end))
        if h < h_min:
            status = STEP_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        eval_rhs(model, t + C2 * h, y + h * (A21 * k1), p, k2)
        eval_rhs(model, t + C3 * h, y + h * (A31 * k1 + A32 * k2), p, k3)
        eval_rhs(model, t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3), p, k4)
        eval_rhs(model, t + C5 * h,
                 y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), p, k5)
        eval_rhs(model, t + h,
                 y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), p, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i]
                                  + A75 * k5[i] + A76 * k6[i])
        eval_rhs(model, t + h, ynew, p, k7)
        stats[2] += 6

        if not (_all_finite(ynew) and _all_finite(k7)):
            stats[1] += 1
            rejected_last = True
            h *= FAC_MIN
            if h < h_min:
                status = NONFINITE
                break
            continue

        err = 0.0
        for i in range(n):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                     + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err = max(err, abs(e) / sc)
        if not np.isfinite(err):
            err = 1e10

        if err <= 1.0:
            t = t_end if last else t + h
            y[:] = ynew
            k1[:] = k7
            if count == times.shape[0]:
                times, states, derivs = _grow(times, states, derivs)
            times[count] = t
            states[count] = y
            derivs[count] = k1
            count += 1
            stats[0] += 1
            stats[4] = max(stats[4], err)
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = SAFETY * err ** (-PI_ALPHA) * err_prev ** PI_BETA
                fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected_last:
                fac = min(fac, 1.0)
            err_prev = max(err, 1e-4)
            h = min(h * fac, h_max)
            rejected_last = False
        else:
            stats[1] += 1
            rejected_last = True
            h *= max(FAC_MIN, SAFETY * err ** (-0.2))
            if h < h_min:
                status = STEP_UNDERFLOW
                break
    return times[:count], states[:count], derivs[:count], stats, status, t


@jit
def _fd_jacobian(model, p, t, y, f0, jac):
    n = y.shape[0]
    yp = y.copy()
    fp = np.empty(n)
    for j in range(n):
        d = SQRT_EPS * max(abs(y[j]), 1.0)
        yp[j] = y[j] + d
        eval_rhs(model, t, yp, p, fp)
        for i in range(n):
            jac[i, j] = (fp[i] - f0[i]) / d
        yp[j] = y[j]
    return n


@jit
def _solve_stage(model, p, t_stage, base, hg, z, iter_mat, ntol, floor, fz):
    """Simplified Newton for z = base + hg f(t_stage, z); z holds the guess."""
    n = z.shape[0]
    nfev = 0
    prev = np.inf
    res = np.empty(n)
    for _ in range(MAX_NEWTON):
        eval_rhs(model, t_stage, z, p, fz)
        nfev += 1
        if not _all_finite(fz):
            return False, nfev
        for i in range(n):
            res[i] = base[i] + hg * fz[i] - z[i]
        dz = np.linalg.solve(iter_mat, res)
        norm = 0.0
        for i in range(n):
            z[i] += dz[i]
            norm = max(norm, abs(dz[i]) / (ntol * abs(z[i]) + floor))
        if not np.isfinite(norm):
            return False, nfev
        if norm <= 1.0:
            return True, nfev
        if norm >= prev:
            return False, nfev
        prev = norm
    return False, nfev


@jit
def _sdirk_step(model, p, t, y, h, jac, ntol, floor, out):
    n = y.shape[0]
    hg = h * GAMMA
    iter_mat = np.eye(n) - hg * jac
    fz = np.empty(n)
    z1 = y.copy()
    ok, nfev = _solve_stage(model, p, t + hg, y, hg, z1, iter_mat, ntol, floor, fz)
    if not ok:
        return False, nfev
    f1 = (z1 - y) / hg
    base2 = y + (h * (1.0 - GAMMA)) * f1
    z2 = y + h * f1
    ok, nfev2 = _solve_stage(model, p, t + h, base2, hg, z2, iter_mat, ntol, floor, fz)
    out[:] = z2
    return ok, nfev + nfev2


@jit
def sdirk_loop(model, p, t0, t_end, y0, rtol, atol, h_init, h_max, max_steps):
    n = y0.shape[0]
    cap = 256
    times = np.empty(cap)
    states = np.empty((cap, n))
    derivs = np.empty((cap, n))
    stats = np.zeros(5)
    ntol = min(rtol, 1e-10)
    floor = 1e-2 * atol

    y = y0.copy()
    t = t0
    f0 = np.empty(n)
    eval_rhs(model, t, y, p, f0)
    stats[2] += 1
    times[0] = t
    states[0] = y
    derivs[0] = f0
    count = 1
    if not _all_finite(f0):
        return times[:count], states[:count], derivs[:count], stats, NONFINITE, t

    if h_init > 0.0:
        h = min(h_init, h_max)
    else:
        h = _initial_step(model, p, t, y, f0, rtol, atol, 2.0, h_max)
        stats[2] += 1

    jac = np.empty((n, n))
    stats[2] += _fd_jacobian(model, p, t, y, f0, jac)
    ybig = np.empty(n)
    yhalf = np.empty(n)
    ysmall = np.empty(n)
    ynew = np.empty(n)
    status = OK
    rejected_last = False
    attempts = 0
    while t < t_end:
        if attempts >= max_steps:
            status = MAX_STEPS
            break
        attempts += 1
        h_min = 16.0 * EPS * max(abs(t), abs(t_end))
        if h < h_min:
            status = STEP_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        ok1, nf1 = _sdirk_step(model, p, t, y, h, jac, ntol, floor, ybig)
        ok2, nf2 = _sdirk_step(model, p, t, y, 0.5 * h, jac, ntol, floor, yhalf)
        ok3 = False
        nf3 = 0
        if ok2:
            ok3, nf3 = _sdirk_step(model, p, t + 0.5 * h, yhalf, 0.5 * h, jac,
                                   ntol, floor, ysmall)
        stats[2] += nf1 + nf2 + nf3
        if not (ok1 and ok2 and ok3):
            stats[1] += 1
            stats[3] += 1
            rejected_last = True
            h *= 0.25
            if h < h_min:
                status = NEWTON_DIVERGED
                break
            continue

        # step doubling; the Richardson-extrapolated value is carried forward
        err = 0.0
        for i in range(n):
            e = (ysmall[i] - ybig[i]) / 3.0
            ynew[i] = ysmall[i] + e
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err = max(err, abs(e) / sc)
        if not np.isfinite(err):
            err = 1e10

        if err <= 1.0:
            t = t_end if last else t + h
            y[:] = ynew
            eval_rhs(model, t, y, p, f0)
            stats[2] += 1
            if not _all_finite(f0):
                status = NONFINITE
                break
            if count == times.shape[0]:
                times, states, derivs = _grow(times, states, derivs)
            times[count] = t
            states[count] = y
            derivs[count] = f0
            count += 1
            stats[0] += 1
            stats[4] = max(stats[4], err)
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err ** (-1.0 / 3.0)))
            if rejected_last:
                fac = min(fac, 1.0)
            h = min(h * fac, h_max)
            rejected_last = False
            if t < t_end:
                stats[2] += _fd_jacobian(model, p, t, y, f0, jac)
        else:
            stats[1] += 1
            rejected_last = True
            h *= max(FAC_MIN, SAFETY * err ** (-1.0 / 3.0))
            if h < h_min:
                status = STEP_UNDERFLOW
                break
    return times[:count], states[:count], derivs[:count], stats, status, t


_HELPERS = ("_all_finite", "_grow", "_initial_step", "_fd_jacobian",
            "_solve_stage", "_sdirk_step", "dopri_loop", "sdirk_loop")


def python_loop(name, rhs_adapter=None):
    """Uncompiled copy of loop ``name`` (and every helper it calls).

    With ``rhs_adapter`` the copies call it in place of the model dispatch;
    it must have the ``eval_rhs(model, t, y, p, out)`` signature.
    """
    namespace = dict(globals())
    namespace["eval_rhs"] = pure_eval_rhs() if rhs_adapter is None else rhs_adapter
    for helper in _HELPERS:
        code = _accel.python_version(globals()[helper]).__code__
        namespace[helper] = types.FunctionType(code, namespace, helper)
    return namespace[name]
