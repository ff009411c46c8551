"""Reference computations that share no code with the package.

scipy's Radau integrator stands in for the in-house solvers and the
quadratic roots use the textbook (cancellation-prone) formula.
"""
import math

import numpy as np
from scipy.integrate import solve_ivp


def naive_cminus(xbar, e_t, k_m):
    b = e_t + k_m + xbar
    return (b - math.sqrt(b * b - 4 * e_t * xbar)) / 2


def naive_alpha_kw(k1, k_minus1, k2, e_t):
    k_m = (k_minus1 + k2) / k1
    alpha = 0.5 * k1 * (k_m + e_t) * (1 - math.sqrt(1 - 4 * k2 * e_t / (k1 * (k_m + e_t) ** 2)))
    return alpha, (k2 - alpha) / alpha * e_t


def radau(rhs, t_end, y0, t_eval, rtol=1e-11, atol=1e-13):
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="Radau", rtol=rtol, atol=atol,
                    t_eval=t_eval)
    assert sol.success, sol.message
    return sol.y.T


def full_mm(k1, k_minus1, k2, e_t):
    k_m = (k_minus1 + k2) / k1

    def rhs(t, y):
        x, c = y
        return [-k1 * x * (e_t - c) + k_minus1 * c, k1 * (x * (e_t - c) - k_m * c)]

    return rhs


def tqssa(k1, k_minus1, k2, e_t):
    k_m = (k_minus1 + k2) / k1
    return lambda t, y: [-k2 * naive_cminus(y[0], e_t, k_m)]


def hta_outer(kappa, lam, eps):
    return lambda t, y: [-y[0] + (y[0] + kappa - lam) * y[1],
                         (y[0] - (y[0] + kappa) * y[1]) / eps]
