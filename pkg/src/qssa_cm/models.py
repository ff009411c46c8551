"""Right-hand sides of every system in the toolkit.

Dimensional: the full mass-action system in (X, C) and the lumped system in
(Xbar, C).  Nondimensional: the HTA and total-QSSA scalings, each in the
outer (tau) and inner (s = tau/eps) frame.  :class:`GeneralSP` holds a
user-supplied slow/fast system

    du/ds = eps * phi(u, v)
    dv/ds = a u + b v + psi(u, v),   b < 0,

of which both nondimensional scalings are instances.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as _k
from .kinetics import NondimHTA, NondimTQ, ParameterSet, RateConstants, Totals
from .solver import KernelRHS, OdeProblem


class TimeFrame(enum.Enum):
    OUTER = "outer"  # slow time tau
    INNER = "inner"  # stretched time s = tau / eps


def _frame(frame):
    return frame if isinstance(frame, TimeFrame) else TimeFrame(frame)


def rhs_full_mm(state, rates: RateConstants, totals: Totals):
    """(dX/dt, dC/dt) of the full mass-action system."""
    x, c = state
    return (_k.full_mm_x(x, c, rates.k1, rates.k_minus1, totals.E_T),
            _k.full_mm_c(x, c, rates.k1, rates.k_minus1, rates.k2, totals.E_T))


def rhs_lumped(state, rates: RateConstants, totals: Totals):
    """(dXbar/dt, dC/dt) in the total-substrate variable Xbar = X + C."""
    xbar, c = state
    k_m = (rates.k_minus1 + rates.k2) / rates.k1
    return -rates.k2 * c, _k.lumped_c(xbar, c, rates.k1, totals.E_T, k_m)


def rhs_hta(u, v, p: NondimHTA, frame=TimeFrame.OUTER):
    phi = _k.hta_phi(u, v, p.kappa, p.lam)
    g = _k.hta_g(u, v, p.kappa)
    if _frame(frame) is TimeFrame.OUTER:
        return phi, g / p.eps
    return p.eps * phi, g


def rhs_tq(u, v, p: NondimTQ, frame=TimeFrame.OUTER):
    g = _k.tq_g(u, v, p.sigma, p.eta, p.kappa_m)
    if _frame(frame) is TimeFrame.OUTER:
        return -v, g / p.eps
    return -p.eps * v, g


def rhs_carr(u, v, c, eps):
    """Carr's normalised HTA example: du = -u + (u + c) v, eps dv = u - (u + 1) v."""
    return -u + (u + c) * v, (u - (u + 1) * v) / eps


class SPValidationError(ValueError):
    """A GeneralSP failed one of its structural conditions at the origin."""

    def __init__(self, condition, value):
        super().__init__(f"condition {condition} violated (value {value:.3e})")
        self.condition = condition
        self.value = value


_FD_STEP = 1e-5
_FD_TOL = 1e-8


@dataclass(frozen=True)
class GeneralSP:
    a: float
    b: float
    phi: Callable
    psi: Callable

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (np.isfinite(self.b) and self.b < 0):
            raise SPValidationError("b < 0", self.b)
        if not np.isfinite(self.a):
            raise SPValidationError("a finite", self.a)
        h = _FD_STEP
        checks = (
            ("phi(0,0) = 0", self.phi(0.0, 0.0)),
            ("psi(0,0) = 0", self.psi(0.0, 0.0)),
            ("psi_u(0,0) = 0", (self.psi(h, 0.0) - self.psi(-h, 0.0)) / (2 * h)),
            ("psi_v(0,0) = 0", (self.psi(0.0, h) - self.psi(0.0, -h)) / (2 * h)),
        )
        for name, value in checks:
            value = float(value)
            if not (np.isfinite(value) and abs(value) <= _FD_TOL):
                raise SPValidationError(name, value)

    def g(self, u, v):
        """Fast-equation right-hand side a u + b v + psi(u, v)."""
        return self.a * u + self.b * v + self.psi(u, v)

    def inner_rhs(self, u, v, eps):
        return eps * self.phi(u, v), self.g(u, v)

    def outer_rhs(self, u, v, eps):
        return self.phi(u, v), self.g(u, v) / eps

    def w_frame(self):
        return WFrameSystem(self)


@dataclass(frozen=True)
class WFrameSystem:
    """The same system in (u, w) with w = a u + b v, which splits off the
    stable direction: dw/ds = b w + a eps phi + b psi.
    """

    sp: GeneralSP

    def v_of(self, u, w):
        return (w - self.sp.a * u) / self.sp.b

    def w_of(self, u, v):
        return self.sp.a * u + self.sp.b * v

    def slow(self, u, w, eps):
        return eps * self.sp.phi(u, self.v_of(u, w))

    def fast(self, u, w, eps=0.0):
        v = self.v_of(u, w)
        return self.sp.b * w + self.sp.a * eps * self.sp.phi(u, v) + self.sp.b * self.sp.psi(u, v)

    def rhs(self, u, w, eps):
        return self.slow(u, w, eps), self.fast(u, w, eps)


def make_general_sp(a, b, phi, psi) -> GeneralSP:
    return GeneralSP(a, b, phi, psi)


def hta_system(p: NondimHTA) -> GeneralSP:
    """HTA as a GeneralSP: a = 1, b = -kappa, psi = -u v."""
    kappa, lam = p.kappa, p.lam
    return GeneralSP(
        a=1.0,
        b=-kappa,
        phi=lambda u, v: _k.hta_phi(u, v, kappa, lam),
        psi=lambda u, v: -u * v,
    )


def tq_system(p: NondimTQ) -> GeneralSP:
    """Total QSSA as a GeneralSP: a = 1, b = -(eta + kappa_m), phi = -v."""
    sigma, eta = p.sigma, p.eta
    return GeneralSP(
        a=1.0,
        b=-(eta + p.kappa_m),
        phi=lambda u, v: -v,
        psi=lambda u, v: eta * sigma * v * v - sigma * u * v,
    )


# problem builders for the integrator

def full_mm_problem(params: ParameterSet, t_end, y0=None, extended=False) -> OdeProblem:
    """Full system from (X_T, 0); ``extended`` also carries E and X_p as states."""
    r, tot = params.rates, params.totals
    p = (r.k1, r.k_minus1, r.k2, tot.E_T)
    if extended:
        y0 = (tot.X_T, 0.0, tot.E_T, 0.0) if y0 is None else y0
        return OdeProblem(KernelRHS(_k.FULL_MM_EXT, p), 0.0, t_end, y0)
    y0 = (tot.X_T, 0.0) if y0 is None else y0
    return OdeProblem(KernelRHS(_k.FULL_MM, p), 0.0, t_end, y0)


def lumped_problem(params: ParameterSet, t_end, y0=None) -> OdeProblem:
    r, tot = params.rates, params.totals
    p = (r.k1, r.k2, tot.E_T, params.derived.K_M)
    y0 = (tot.X_T, 0.0) if y0 is None else y0
    return OdeProblem(KernelRHS(_k.LUMPED, p), 0.0, t_end, y0)


def hta_problem(p: NondimHTA, t_end, y0=(1.0, 0.0), frame=TimeFrame.OUTER) -> OdeProblem:
    model = _k.HTA_OUTER if _frame(frame) is TimeFrame.OUTER else _k.HTA_INNER
    return OdeProblem(KernelRHS(model, (p.kappa, p.lam, p.eps)), 0.0, t_end, y0)


def tq_problem(p: NondimTQ, t_end, y0=(1.0, 0.0), frame=TimeFrame.OUTER) -> OdeProblem:
    model = _k.TQ_OUTER if _frame(frame) is TimeFrame.OUTER else _k.TQ_INNER
    return OdeProblem(KernelRHS(model, (p.sigma, p.eta, p.kappa_m, p.eps)), 0.0, t_end, y0)


def general_sp_problem(sp: GeneralSP, eps, t_end, y0, frame=TimeFrame.OUTER) -> OdeProblem:
    if _frame(frame) is TimeFrame.OUTER:
        def rhs(t, y):
            return np.array(sp.outer_rhs(y[0], y[1], eps), dtype=float)
    else:
        def rhs(t, y):
            return np.array(sp.inner_rhs(y[0], y[1], eps), dtype=float)
    return OdeProblem(rhs, 0.0, t_end, y0)
