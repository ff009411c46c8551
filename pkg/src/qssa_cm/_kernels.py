"""Scalar right-hand-side kernels and the model dispatch used by the steppers.

Every formula lives here exactly once.  The public wrappers in
:mod:`qssa_cm.models` and :mod:`qssa_cm.qssa` call these same functions, so the
integrator and the user-facing API can never disagree about a rate law.
Under numba the functions also accept numpy arrays (elementwise arithmetic).
"""
import types

import numpy as np

from ._accel import jit, python_version

# model ids understood by eval_rhs; parameter layout in the comment
LINEAR = 0          # p = [rate]                       dy = -rate * y
LOGISTIC = 1        # p = [r, cap]                     dy = r y (1 - y/cap)
FULL_MM = 2         # p = [k1, k_minus1, k2, E_T]      y = [X, C]
FULL_MM_EXT = 3     # p = [k1, k_minus1, k2, E_T]      y = [X, C, E, X_p]
LUMPED = 4          # p = [k1, k2, E_T, K_M]           y = [Xbar, C]
HTA_OUTER = 5       # p = [kappa, lam, eps]            y = [u, v], time tau
HTA_INNER = 6       # p = [kappa, lam, eps]            y = [u, v], time s = tau/eps
TQ_OUTER = 7        # p = [sigma, eta, kappa_m, eps]   y = [u, v]
TQ_INNER = 8        # p = [sigma, eta, kappa_m, eps]
SQSSA_REDUCED = 9   # p = [k2, E_T, K_M]               y = [X]
TQSSA_REDUCED = 10  # p = [k2, E_T, K_M]               y = [Xbar]
HTA_REDUCED = 11    # p = [kappa, lam]                 y = [u]
TQ_REDUCED = 12     # p = [sigma, eta, kappa_m]        y = [u]
HTA_LAYER = 13      # p = [kappa, alpha]               y = [v], fast time
TQ_LAYER = 14       # p = [sigma, eta, kappa_m, alpha] y = [v], fast time

MODEL_DIMS = {
    FULL_MM: 2, FULL_MM_EXT: 4, LUMPED: 2, HTA_OUTER: 2, HTA_INNER: 2,
    TQ_OUTER: 2, TQ_INNER: 2, SQSSA_REDUCED: 1, TQSSA_REDUCED: 1,
    HTA_REDUCED: 1, TQ_REDUCED: 1, HTA_LAYER: 1, TQ_LAYER: 1,
}


@jit
def full_mm_x(x, c, k1, k_minus1, e_t):
    return -k1 * x * (e_t - c) + k_minus1 * c


@jit
def full_mm_c(x, c, k1, k_minus1, k2, e_t):
    k_m = (k_minus1 + k2) / k1
    return k1 * (x * (e_t - c) - k_m * c)


@jit
def lumped_c(xbar, c, k1, e_t, k_m):
    return k1 * (xbar * e_t - (xbar + e_t + k_m) * c + c * c)


@jit
def hta_phi(u, v, kappa, lam):
    return -u + (u + kappa - lam) * v


@jit
def hta_g(u, v, kappa):
    return u - (u + kappa) * v


@jit
def tq_g(u, v, sigma, eta, kappa_m):
    return eta * sigma * v * v - (eta + kappa_m) * v - sigma * u * v + u


@jit
def cminus_kernel(xbar, e_t, k_m):
    # 2ac / (b + sqrt(b^2 - 4ac)) form: no cancellation when 4 E_T Xbar << b^2
    b = e_t + k_m + xbar
    return 2.0 * e_t * xbar / (b + np.sqrt(b * b - 4.0 * e_t * xbar))


@jit
def tq_root_kernel(u, sigma, eta, kappa_m):
    # same rationalised root; reduces to u / b when eta * sigma == 0
    b = eta + kappa_m + sigma * u
    return 2.0 * u / (b + np.sqrt(b * b - 4.0 * eta * sigma * u))


@jit
def eval_rhs(model, t, y, p, out):
    if model == LINEAR:
        for i in range(y.shape[0]):
            out[i] = -p[0] * y[i]
    elif model == LOGISTIC:
        for i in range(y.shape[0]):
            out[i] = p[0] * y[i] * (1.0 - y[i] / p[1])
    elif model == FULL_MM:
        out[0] = full_mm_x(y[0], y[1], p[0], p[1], p[3])
        out[1] = full_mm_c(y[0], y[1], p[0], p[1], p[2], p[3])
    elif model == FULL_MM_EXT:
        # E is carried as its own state so E + C = E_T is not built in
        bind = p[0] * y[0] * y[2]
        out[0] = -bind + p[1] * y[1]
        out[1] = bind - (p[1] + p[2]) * y[1]
        out[2] = -bind + (p[1] + p[2]) * y[1]
        out[3] = p[2] * y[1]
    elif model == LUMPED:
        out[0] = -p[1] * y[1]
        out[1] = lumped_c(y[0], y[1], p[0], p[2], p[3])
    elif model == HTA_OUTER:
        out[0] = hta_phi(y[0], y[1], p[0], p[1])
        out[1] = hta_g(y[0], y[1], p[0]) / p[2]
    elif model == HTA_INNER:
        out[0] = p[2] * hta_phi(y[0], y[1], p[0], p[1])
        out[1] = hta_g(y[0], y[1], p[0])
    elif model == TQ_OUTER:
        out[0] = -y[1]
        out[1] = tq_g(y[0], y[1], p[0], p[1], p[2]) / p[3]
    elif model == TQ_INNER:
        out[0] = -p[3] * y[1]
        out[1] = tq_g(y[0], y[1], p[0], p[1], p[2])
    elif model == SQSSA_REDUCED:
        out[0] = -p[0] * p[1] * y[0] / (y[0] + p[2])
    elif model == TQSSA_REDUCED:
        out[0] = -p[0] * cminus_kernel(y[0], p[1], p[2])
    elif model == HTA_REDUCED:
        out[0] = -p[1] * y[0] / (p[0] + y[0])
    elif model == TQ_REDUCED:
        out[0] = -tq_root_kernel(y[0], p[0], p[1], p[2])
    elif model == HTA_LAYER:
        out[0] = hta_g(p[1], y[0], p[0])
    elif model == TQ_LAYER:
        out[0] = tq_g(p[3], y[0], p[0], p[1], p[2])
    else:
        for i in range(y.shape[0]):
            out[i] = np.nan


_FORMULAS = ("full_mm_x", "full_mm_c", "lumped_c", "hta_phi", "hta_g", "tq_g",
             "cminus_kernel", "tq_root_kernel", "eval_rhs")


def pure_eval_rhs():
    """``eval_rhs`` with every formula it calls uncompiled."""
    namespace = dict(globals())
    for name in _FORMULAS:
        code = python_version(globals()[name]).__code__
        namespace[name] = types.FunctionType(code, namespace, name)
    return namespace["eval_rhs"]
