"""Second-order center manifolds of slow/fast systems in GeneralSP form.

In the w-frame (w = a u + b v) the manifold through the origin of the
extended system (u, w, eps) is approximated by

    w = h(u, eps) = lambda1 u^2 + lambda2 u eps + lambda3 eps^2,

with lambda3 identically zero for this class of systems.  The fast variable
is recovered as v = (h - a u) / b.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinetics import NondimHTA, NondimTQ
from .models import GeneralSP


@dataclass(frozen=True)
class PartialDerivs:
    """Partials at the origin: first of phi, second of psi."""

    phi_u: float
    phi_v: float
    psi_uu: float
    psi_uv: float
    psi_vv: float

    def __post_init__(self):
        for name in ("phi_u", "phi_v", "psi_uu", "psi_uv", "psi_vv"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} is not finite")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class ManifoldCoeffs:
    lambda1: float
    lambda2: float
    a: float
    b: float
    lambda3: float = 0.0

    def __post_init__(self):
        if not self.b < 0:
            raise ValueError(f"b must be negative, got {self.b}")
        if self.lambda3 != 0.0:
            raise ValueError("lambda3 is identically zero for this system class")

    @property
    def validity_radius(self):
        # heuristic; the expansion is only local
        return min(1.0, abs(self.b) / (2.0 * max(abs(self.lambda1), 1.0)))

    def within_validity(self, u, eps=0.0):
        r = self.validity_radius
        return bool(np.all(np.abs(u) <= r) and np.all(np.abs(eps) <= r))

    def as_tuple(self):
        return (self.lambda1, self.lambda2, self.lambda3)


def coeffs_general(p: PartialDerivs, a, b) -> ManifoldCoeffs:
    """Manifold coefficients from the origin partials of phi and psi."""
    if not b < 0:
        raise ValueError(f"b must be negative, got {b}")
    r = a / b
    lambda1 = -0.5 * (p.psi_uu - 2.0 * r * p.psi_uv + r * r * p.psi_vv)
    lambda2 = -r * (p.phi_u - r * p.phi_v)
    return ManifoldCoeffs(lambda1, lambda2, float(a), float(b))


def hta_partials(p: NondimHTA) -> PartialDerivs:
    return PartialDerivs(phi_u=-1.0, phi_v=p.kappa - p.lam, psi_uu=0.0, psi_uv=-1.0, psi_vv=0.0)


def tq_partials(p: NondimTQ) -> PartialDerivs:
    return PartialDerivs(phi_u=0.0, phi_v=-1.0, psi_uu=0.0, psi_uv=-p.sigma,
                         psi_vv=2.0 * p.eta * p.sigma)


def coeffs_closed_form(model, params) -> ManifoldCoeffs:
    """Hand-derived coefficients for the HTA ("hta") and total-QSSA ("tq") systems."""
    if model == "hta":
        k, lam = params.kappa, params.lam
        return ManifoldCoeffs(1.0 / k, -lam / (k * k), 1.0, -k)
    if model == "tq":
        big_b = params.eta + params.kappa_m
        return ManifoldCoeffs(params.sigma * params.kappa_m / big_b ** 2, -1.0 / big_b ** 2,
                              1.0, -big_b)
    raise ValueError(f"model must be 'hta' or 'tq', got {model!r}")


def _richardson(estimates, order=2):
    """Eliminate h^order, h^(2 order), ... from estimates at h, h/2, h/4, ..."""
    table = list(estimates)
    k = order
    while len(table) > 1:
        f = 2.0 ** k
        table = [(f * fine - coarse) / (f - 1.0) for coarse, fine in zip(table, table[1:])]
        k += order
    return table[0]


def _finite(value, what):
    if not np.isfinite(value):
        raise ValueError(f"non-finite sample while estimating {what}")
    return value


def estimate_partials(sp: GeneralSP, h0=1e-2, levels=3) -> PartialDerivs:
    """Central differences at h0, h0/2, ... combined by Richardson extrapolation."""
    phi, psi = sp.phi, sp.psi
    hs = [h0 / 2 ** i for i in range(levels)]
    psi0 = _finite(float(psi(0.0, 0.0)), "psi")

    def first(f, du, dv, name):
        return [_finite((f(du * h, dv * h) - f(-du * h, -dv * h)) / (2 * h), name) for h in hs]

    def second(f, du, dv, name):
        return [_finite((f(du * h, dv * h) - 2 * psi0 + f(-du * h, -dv * h)) / (h * h), name)
                for h in hs]

    mixed = [_finite((psi(h, h) - psi(h, -h) - psi(-h, h) + psi(-h, -h)) / (4 * h * h), "psi_uv")
             for h in hs]
    return PartialDerivs(
        phi_u=_richardson(first(phi, 1, 0, "phi_u")),
        phi_v=_richardson(first(phi, 0, 1, "phi_v")),
        psi_uu=_richardson(second(psi, 1, 0, "psi_uu")),
        psi_uv=_richardson(mixed),
        psi_vv=_richardson(second(psi, 0, 1, "psi_vv")),
    )


def manifold_h(c: ManifoldCoeffs, u, eps):
    u = np.asarray(u, dtype=float)
    out = c.lambda1 * u * u + c.lambda2 * u * eps + c.lambda3 * eps * eps
    return out if out.ndim else float(out)


def manifold_h_u(c: ManifoldCoeffs, u, eps):
    """Partial derivative of h with respect to u."""
    return 2.0 * c.lambda1 * np.asarray(u, dtype=float) + c.lambda2 * eps


def reconstruct_v(c: ManifoldCoeffs, u, eps):
    """Fast variable on the manifold, v = (h(u, eps) - a u) / b."""
    u = np.asarray(u, dtype=float)
    out = (manifold_h(c, u, eps) - c.a * u) / c.b
    return out if np.ndim(out) else float(out)


def manifold_residual(sp: GeneralSP, c: ManifoldCoeffs, u, eps):
    """Invariance defect of w = h(u, eps) for the inner-time w-frame flow.

    N(h) = D_u h * eps phi - (b h + a eps phi + b psi), all evaluated at
    v = (h - a u) / b.  Vanishes identically on an exact center manifold.
    """
    h = manifold_h(c, u, eps)
    v = (h - sp.a * u) / sp.b
    slow = eps * sp.phi(u, v)
    return manifold_h_u(c, u, eps) * slow - (sp.b * h + sp.a * slow + sp.b * sp.psi(u, v))


def reduced_field(system, c: ManifoldCoeffs, u, eps):
    """du/dtau truncated at second order on the manifold.

    -(b/a) lambda2 u + (lambda1 u^2 + lambda2 u eps) phi_v / b, where phi_v is
    taken at the origin.  ``system`` is a GeneralSP (partials estimated) or a
    PartialDerivs.  Quadratic terms of phi itself are not part of this
    truncation; :func:`reduced_field_on_manifold` evaluates phi exactly.
    """
    if c.a == 0:
        raise ZeroDivisionError("reduced field needs a != 0")
    p = system if isinstance(system, PartialDerivs) else estimate_partials(system)
    u = np.asarray(u, dtype=float)
    out = -(c.b / c.a) * c.lambda2 * u + (c.lambda1 * u * u + c.lambda2 * u * eps) * p.phi_v / c.b
    return out if out.ndim else float(out)


def reduced_field_on_manifold(sp: GeneralSP, c: ManifoldCoeffs, u, eps):
    """phi(u, v) with v reconstructed from the manifold (no truncation of phi)."""
    return sp.phi(u, reconstruct_v(c, u, eps))


def reduced_field_hta(u, p: NondimHTA, eps=None):
    """(lam/kappa) u [-1 + u/kappa + (kappa - lam) eps / kappa^2]."""
    eps = p.eps if eps is None else eps
    k, lam = p.kappa, p.lam
    u = np.asarray(u, dtype=float)
    return (lam / k) * u * (-1.0 + u / k + (k - lam) * eps / (k * k))


def reduced_field_tq(u, p: NondimTQ, eps=None):
    """-(u/B) [1 - sigma kappa_m u / B^2 + eps / B^2], B = eta + kappa_m."""
    eps = p.eps if eps is None else eps
    big_b = p.eta + p.kappa_m
    u = np.asarray(u, dtype=float)
    return -(u / big_b) * (1.0 - p.sigma * p.kappa_m * u / big_b ** 2 + eps / big_b ** 2)


def tq_manifold_rational(u, p: NondimTQ, eps=0.0):
    """Manifold fast variable written as (u/B)(1 - w/u)."""
    c = coeffs_closed_form("tq", p)
    u = np.asarray(u, dtype=float)
    big_b = p.eta + p.kappa_m
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(u == 0, 0.0, (u / big_b) * (1.0 - manifold_h(c, u, eps) / u))
    return out if out.ndim else float(out)


def tq_root_rational(u, p: NondimTQ):
    """Small-u form of the total-QSSA root, u / (eta + kappa_m + sigma u)."""
    u = np.asarray(u, dtype=float)
    return u / (p.eta + p.kappa_m + p.sigma * u)


def fit_order(x, y):
    """Least-squares slope of log|y| against log x (zeros are dropped)."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = (y > 0) & (x > 0)
    if keep.sum() < 2:
        return np.inf if not np.any(y) else np.nan
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


@dataclass(frozen=True)
class OrderReport:
    u: np.ndarray
    difference: np.ndarray      # |v_manifold(u, 0) - v_root(u)|
    ratio: np.ndarray           # v_manifold / v_root
    order: float                # fitted decay order of the difference
    relative_order: float       # fitted decay order of difference / u
    equivalent: bool            # difference / u -> 0


def asymptotic_compare(c: ManifoldCoeffs, root, u_grid, manifold=None) -> OrderReport:
    """Compare the eps = 0 manifold with a root curve as u -> 0.

    ``root`` maps u to v.  ``manifold`` overrides the manifold side (by default
    reconstruct_v(c, u, 0)).  Identical curves give order ``inf``.
    """
    u = np.asarray(u_grid, dtype=float)
    v_m = np.asarray(reconstruct_v(c, u, 0.0) if manifold is None else manifold(u), dtype=float)
    v_r = np.asarray(root(u), dtype=float)
    diff = np.abs(v_m - v_r)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(v_r == 0, 1.0, v_m / v_r)
    order = fit_order(u, diff)
    rel = fit_order(u, diff / u)
    equivalent = bool(not np.any(diff) or rel > 0)
    return OrderReport(u, diff, ratio, order, rel, equivalent)
