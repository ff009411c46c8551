"""Kinetic parameters of the single-substrate enzyme reaction

    X + E  <-> C  -> X_p + E      (k1 forward, k_minus1 back, k2 catalytic)

their derived constants, the two nondimensional scalings, and the
conservation-law check on simulated trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ValidationError(ValueError):
    """A parameter failed validation; ``field`` names it."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _check_positive(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(name, f"expected a number, got {value!r}") from None
    if not math.isfinite(value):
        raise ValidationError(name, f"must be finite, got {value}")
    if value <= 0:
        raise ValidationError(name, f"must be strictly positive, got {value}")
    return value


@dataclass(frozen=True)
class RateConstants:
    k1: float
    k_minus1: float
    k2: float

    def __post_init__(self):
        for name in ("k1", "k_minus1", "k2"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))


@dataclass(frozen=True)
class Totals:
    E_T: float
    X_T: float

    def __post_init__(self):
        for name in ("E_T", "X_T"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))


class StateMM(NamedTuple):
    X: float
    C: float


class StateLumped(NamedTuple):
    Xbar: float
    C: float


def check_state(state, totals: Totals, tol=1e-12):
    """Raise ValidationError unless ``state`` is physically admissible."""
    scale = tol * max(totals.E_T, totals.X_T)
    if isinstance(state, StateLumped):
        xbar, c = state
        if not -scale <= xbar <= totals.X_T + scale:
            raise ValidationError("Xbar", f"{xbar} outside [0, X_T]")
        if not -scale <= c <= min(totals.E_T, xbar) + scale:
            raise ValidationError("C", f"{c} outside [0, min(E_T, Xbar)]")
        return state
    x, c = state
    if x < -scale:
        raise ValidationError("X", f"negative substrate {x}")
    if not -scale <= c <= min(totals.E_T, totals.X_T) + scale:
        raise ValidationError("C", f"{c} outside [0, min(E_T, X_T)]")
    if x + c > totals.X_T + scale:
        raise ValidationError("X+C", f"{x + c} exceeds X_T")
    return state


@dataclass(frozen=True)
class DerivedConstants:
    K_M: float
    K_D: float
    K: float
    eps_HTA: float
    eps_SS: float
    eps_TQ: float


@dataclass(frozen=True)
class NondimHTA:
    """Heineken-Tsuchiya-Aris scaling: u = X/X_T, v = C/E_T, tau = k1 E_T t.

    ``time_scale`` is the dimensional time per unit of tau, 1/(k1 E_T).
    """

    kappa: float
    lam: float
    eps: float
    x_scale: float = 1.0
    c_scale: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "lam", "eps", "x_scale", "c_scale", "time_scale"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))
        # kappa == lam is the k_minus1 -> 0 boundary; still a valid system
        if self.lam > self.kappa:
            raise ValidationError("lam", f"cannot exceed kappa={self.kappa} (K <= K_M)")

    def to_nondim(self, X, C, t=0.0):
        return (np.asarray(X) / self.x_scale, np.asarray(C) / self.c_scale,
                np.asarray(t) / self.time_scale)

    def to_dimensional(self, u, v, tau=0.0):
        return (np.asarray(u) * self.x_scale, np.asarray(v) * self.c_scale,
                np.asarray(tau) * self.time_scale)


@dataclass(frozen=True)
class NondimTQ:
    """Total-QSSA scaling: u = Xbar/X_T, v = C/c_scale, tau = t/time_scale,
    with c_scale = E_T X_T/S and time_scale = S/(k2 E_T), S = E_T + K_M + X_T.
    """

    sigma: float
    eta: float
    kappa_m: float
    eps: float
    x_scale: float = 1.0
    c_scale: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self):
        for name in ("sigma", "eta", "kappa_m", "eps", "x_scale", "c_scale", "time_scale"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))
        for name in ("sigma", "eta", "kappa_m"):
            if getattr(self, name) >= 1:
                raise ValidationError(name, "must lie in (0, 1)")
        if abs(self.sigma + self.eta + self.kappa_m - 1.0) > 1e-12:
            raise ValidationError("sigma+eta+kappa_m", "must sum to 1")
        if self.eps > 0.25:
            raise ValidationError("eps", "cannot exceed 1/4")

    @classmethod
    def from_fractions(cls, sigma, eta, kappa_m, eps):
        """Scale-free parameter set (unit scales); ``sigma+eta+kappa_m`` must be 1."""
        return cls(sigma, eta, kappa_m, eps)

    def to_nondim(self, Xbar, C, t=0.0):
        return (np.asarray(Xbar) / self.x_scale, np.asarray(C) / self.c_scale,
                np.asarray(t) / self.time_scale)

    def to_dimensional(self, u, v, tau=0.0):
        return (np.asarray(u) * self.x_scale, np.asarray(v) * self.c_scale,
                np.asarray(tau) * self.time_scale)


def derive_constants(rates: RateConstants, totals: Totals) -> DerivedConstants:
    k1, km1, k2 = rates.k1, rates.k_minus1, rates.k2
    e_t, x_t = totals.E_T, totals.X_T
    k_m = (km1 + k2) / k1
    k_d = km1 / k1
    k = k2 / k1
    s = e_t + k_m + x_t
    return DerivedConstants(
        K_M=k_m,
        K_D=k_d,
        K=k,
        eps_HTA=e_t / x_t,
        eps_SS=e_t / (x_t + k_m),
        eps_TQ=k * e_t / (s * s),
    )


def nondim_hta(rates: RateConstants, totals: Totals) -> NondimHTA:
    d = derive_constants(rates, totals)
    x_t, e_t = totals.X_T, totals.E_T
    return NondimHTA(
        kappa=d.K_M / x_t,
        lam=rates.k2 / (rates.k1 * x_t),
        eps=e_t / x_t,
        x_scale=x_t,
        c_scale=e_t,
        time_scale=1.0 / (rates.k1 * e_t),
    )


def nondim_tq(rates: RateConstants, totals: Totals) -> NondimTQ:
    d = derive_constants(rates, totals)
    x_t, e_t = totals.X_T, totals.E_T
    s = e_t + d.K_M + x_t
    sigma, eta = x_t / s, e_t / s
    return NondimTQ(
        sigma=sigma,
        eta=eta,
        kappa_m=d.K_M / s,
        eps=d.eps_TQ,
        x_scale=x_t,
        c_scale=e_t * x_t / s,
        time_scale=s / (rates.k2 * e_t),
    )


def carr_parameters(c, eps):
    """HTA parameters of Carr's normalised example, du = -u + (u + c) v.

    Matching ``u + kappa - lam`` against ``u + c`` with ``kappa = 1`` gives
    ``lam = 1 - c``, so ``0 < c < 1``.
    """
    if not 0 < c < 1:
        raise ValidationError("c", "Carr's normalisation needs 0 < c < 1")
    return NondimHTA(kappa=1.0, lam=1.0 - c, eps=eps)


@dataclass(frozen=True)
class ParameterSet:
    """Rates and totals with their derived constants computed once, up front."""

    rates: RateConstants
    totals: Totals

    def __post_init__(self):
        object.__setattr__(self, "derived", derive_constants(self.rates, self.totals))
        object.__setattr__(self, "hta", nondim_hta(self.rates, self.totals))
        object.__setattr__(self, "tq", nondim_tq(self.rates, self.totals))

    @classmethod
    def of(cls, k1, k_minus1, k2, E_T, X_T):
        return cls(RateConstants(k1, k_minus1, k2), Totals(E_T, X_T))

    def as_dict(self):
        return {"k1": self.rates.k1, "k_minus1": self.rates.k_minus1, "k2": self.rates.k2,
                "E_T": self.totals.E_T, "X_T": self.totals.X_T}


def _cumulative_hermite(times, f, df):
    """Running integral of f sampled with its derivative df (4th order)."""
    h = np.diff(times)
    pieces = 0.5 * h * (f[1:] + f[:-1]) + h * h / 12.0 * (df[:-1] - df[1:])
    return np.concatenate(([0.0], np.cumsum(pieces)))


def conservation_residuals(traj, rates: RateConstants, totals: Totals):
    """Worst-case ``(|X + C + X_p - X_T|, |E + C - E_T|)`` over a full-system run.

    Two-state trajectories ``(X, C)`` get X_p by integrating k2 C along the
    stored steps and E from E_T - C (so the second residual is zero by
    construction).  Four-state trajectories ``(X, C, E, X_p)`` carry both
    species explicitly and are checked as they are.
    """
    states = np.asarray(traj.states)
    if states.shape[0] == 0:
        raise ValueError("empty trajectory")
    x, c = states[:, 0], states[:, 1]
    if states.shape[1] >= 4:
        e, x_p = states[:, 2], states[:, 3]
    elif states.shape[1] == 2:
        e = totals.E_T - c
        x_p0 = totals.X_T - x[0] - c[0]
        if states.shape[0] > 1:
            x_p = x_p0 + rates.k2 * _cumulative_hermite(traj.times, c, traj.derivs[:, 1])
        else:
            x_p = np.array([x_p0])
    else:
        raise ValueError(f"expected 2 or 4 state components, got {states.shape[1]}")
    return (float(np.max(np.abs(x + c + x_p - totals.X_T))),
            float(np.max(np.abs(e + c - totals.E_T))))
