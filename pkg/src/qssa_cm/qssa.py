"""Quasi-steady-state reductions.

Standard (sQSSA) and total (tQSSA) closures as algebraic roots plus the
one-dimensional reduced ODEs they leave behind, and a Newton root finder for
the fast equation of any :class:`~qssa_cm.models.GeneralSP`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .kinetics import NondimHTA, NondimTQ, ParameterSet, RateConstants, Totals
from .models import GeneralSP
from .solver import KernelRHS, OdeProblem, SolverConfig, Trajectory, integrate

KINDS = ("sqssa", "tqssa", "hta", "tq", "general")


class RootError(ArithmeticError):
    """Newton failed on the fast equation; ``last`` is the final iterate."""

    def __init__(self, message, last=np.nan):
        super().__init__(message)
        self.last = last


def sqssa_complex(X, E_T, K_M):
    """C = E_T X / (X + K_M)."""
    X = np.asarray(X, dtype=float)
    out = E_T * X / (X + K_M)
    return out if out.ndim else float(out)


def sqssa_v(u, kappa):
    """Nondimensional sQSSA root v = u / (kappa + u)."""
    u = np.asarray(u, dtype=float)
    out = u / (kappa + u)
    return out if out.ndim else float(out)


def sqssa_reduced_rhs(X, rates: RateConstants, totals: Totals):
    """dX/dt = -k2 E_T X / (X + K_M)."""
    k_m = (rates.k_minus1 + rates.k2) / rates.k1
    return -rates.k2 * sqssa_complex(X, totals.E_T, k_m)


def cminus(Xbar, E_T, K_M):
    """Smaller root C_- of  Xbar E_T - (Xbar + E_T + K_M) C + C^2 = 0.

    Evaluated as 2 E_T Xbar / (B + sqrt(B^2 - 4 E_T Xbar)), B = E_T + K_M + Xbar,
    which has no cancellation when the quadratic term is small.
    """
    xbar = np.asarray(Xbar, dtype=float)
    b = E_T + K_M + xbar
    disc = b * b - 4.0 * E_T * xbar
    if np.any(disc < 0):
        raise ArithmeticError(f"negative discriminant in C_- (min {np.min(disc):.3e})")
    if E_T == 0:
        out = np.zeros_like(xbar)
    else:
        out = _k.cminus_kernel(xbar, float(E_T), float(K_M))
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def cminus_residual(Xbar, C, E_T, K_M):
    """Quadratic residual of a candidate complex and its scale (E_T+K_M+Xbar)^2."""
    b = E_T + K_M + np.asarray(Xbar, dtype=float)
    return Xbar * E_T - b * C + C * C, b * b


def tqssa_reduced_rhs(Xbar, rates: RateConstants, totals: Totals):
    """dXbar/dt = -k2 C_-(Xbar)."""
    k_m = (rates.k_minus1 + rates.k2) / rates.k1
    return -rates.k2 * cminus(Xbar, totals.E_T, k_m)


def tq_root_nondim(u, p: NondimTQ):
    """Smaller root v of  eta sigma v^2 - (eta + kappa_m + sigma u) v + u = 0.

    The rationalised form reduces to the linear root u / (eta + kappa_m + sigma u)
    when eta sigma vanishes.
    """
    u = np.asarray(u, dtype=float)
    out = np.asarray(_k.tq_root_kernel(u, p.sigma, p.eta, p.kappa_m), dtype=float)
    return out if out.ndim else float(out)


def hta_reduced_rhs(u, p: NondimHTA):
    return -p.lam * np.asarray(u) / (p.kappa + np.asarray(u))


def tq_reduced_rhs(u, p: NondimTQ):
    return -tq_root_nondim(u, p)


@dataclass(frozen=True)
class RootResult:
    value: float      # root in the w-frame, w = a u + b v
    v: float          # same root in the original fast variable
    residual: float
    stable: bool
    iterations: int
    derivative: float


_MAX_NEWTON = 50


def tihonov_root(sp: GeneralSP, u, guess=None) -> RootResult:
    """Root of the fast equation g(u, .) = 0 at frozen ``u``.

    Newton runs in the w-frame at eps = 0, G(w) = b w + b psi(u, (w - a u)/b).
    The default start w = 0 is the linearised root v = -a u / b.  ``guess`` is
    a starting value for v.  The root is stable when dG/dw < 0.
    """
    a, b = sp.a, sp.b
    u = float(u)

    def G(w):
        return b * w + b * sp.psi(u, (w - a * u) / b)

    w = 0.0 if guess is None else a * u + b * float(guess)
    scale = max(abs(a * u), abs(w), 1e-300)
    it = 0
    gw = G(w)
    while True:
        hw = 1e-6 * max(abs(w), abs(a * u), 1e-8)
        dg = (G(w + hw) - G(w - hw)) / (2 * hw)
        if not np.isfinite(gw) or not np.isfinite(dg):
            raise RootError(f"non-finite fast equation at u={u}", w)
        if gw == 0.0:
            break
        if abs(dg) < 1e-14 * max(abs(b), 1.0):
            raise RootError(f"singular derivative dG/dw={dg:.3e} at u={u}", w)
        if it >= _MAX_NEWTON:
            raise RootError(f"no convergence after {_MAX_NEWTON} iterations at u={u}", w)
        step = gw / dg
        w -= step
        it += 1
        gw = G(w)
        scale = max(abs(a * u), abs(w), 1e-300)
        if abs(step) <= 4e-16 * scale and abs(gw) <= 1e-10 * scale:
            break
    if abs(gw) > 1e-10 * scale:
        raise RootError(f"residual {gw:.3e} above tolerance at u={u}", w)
    return RootResult(value=w, v=(w - a * u) / b, residual=gw, stable=bool(dg < 0),
                      iterations=it, derivative=dg)


@dataclass(frozen=True)
class ReducedSolution:
    kind: str
    trajectory: Trajectory
    fast: np.ndarray
    params: object

    @property
    def times(self):
        return self.trajectory.times

    @property
    def slow(self):
        return self.trajectory.states[:, 0]


def _root_fn(kind, params):
    if kind == "sqssa":
        return lambda x: sqssa_complex(x, params.totals.E_T, params.derived.K_M)
    if kind == "tqssa":
        return lambda x: cminus(x, params.totals.E_T, params.derived.K_M)
    if kind == "hta":
        return lambda u: sqssa_v(u, params.kappa)
    if kind == "tq":
        return lambda u: tq_root_nondim(u, params)
    return lambda u: np.array([tihonov_root(params, x).v for x in np.atleast_1d(u)])


def root_function(kind, params):
    """Algebraic root y = phi(x) that closes the reduction ``kind``."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return _root_fn(kind, params)


def reduced_problem(kind, params, X0, T) -> OdeProblem:
    if kind == "sqssa":
        p = (params.rates.k2, params.totals.E_T, params.derived.K_M)
        return OdeProblem(KernelRHS(_k.SQSSA_REDUCED, p), 0.0, T, [X0])
    if kind == "tqssa":
        p = (params.rates.k2, params.totals.E_T, params.derived.K_M)
        return OdeProblem(KernelRHS(_k.TQSSA_REDUCED, p), 0.0, T, [X0])
    if kind == "hta":
        return OdeProblem(KernelRHS(_k.HTA_REDUCED, (params.kappa, params.lam)), 0.0, T, [X0])
    if kind == "tq":
        p = (params.sigma, params.eta, params.kappa_m)
        return OdeProblem(KernelRHS(_k.TQ_REDUCED, p), 0.0, T, [X0])
    if kind == "general":
        sp = params

        def rhs(t, y):
            return np.array([sp.phi(y[0], tihonov_root(sp, y[0]).v)])

        return OdeProblem(rhs, 0.0, T, [X0])
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def _check_params(kind, params):
    expected = {"sqssa": ParameterSet, "tqssa": ParameterSet, "hta": NondimHTA,
                "tq": NondimTQ, "general": GeneralSP}[kind]
    if not isinstance(params, expected):
        raise TypeError(f"{kind} reduction needs {expected.__name__}, got {type(params).__name__}")


def solve_reduced(kind, params, X0=None, T=None, config: SolverConfig | None = None):
    """Integrate the reduced slow equation and rebuild the fast variable from its root.

    ``params`` is a ParameterSet for the dimensional closures ("sqssa",
    "tqssa"), NondimHTA / NondimTQ for "hta" / "tq", and a GeneralSP for
    "general".  ``X0`` defaults to X_T (dimensional) or 1 (nondimensional).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    _check_params(kind, params)
    if X0 is None:
        X0 = params.totals.X_T if kind in ("sqssa", "tqssa") else 1.0
    if T is None:
        raise ValueError("horizon T is required")
    traj = integrate(reduced_problem(kind, params, X0, T), config)
    fast = np.asarray(_root_fn(kind, params)(traj.states[:, 0]), dtype=float)
    return ReducedSolution(kind, traj, fast, params)
