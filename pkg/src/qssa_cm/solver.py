"""Adaptive ODE integration: an explicit Dormand-Prince 5(4) path and a
stiff-capable SDIRK2 path with step-doubling error control.

Problems whose right-hand side is a :class:`KernelRHS` (every built-in model)
run through the compiled loops; any other callable ``rhs(t, y)`` runs through
an uncompiled copy of the same loop code.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from . import _accel, _steppers
from ._kernels import MODEL_DIMS, eval_rhs

EXPLICIT = "explicit_adaptive"
IMPLICIT = "implicit_stiff"
METHODS = (EXPLICIT, IMPLICIT)
_LOOPS = {EXPLICIT: "dopri_loop", IMPLICIT: "sdirk_loop"}


class IntegrationError(RuntimeError):
    """Raised when an integration cannot reach ``t_end``.

    ``t_last`` is the last time with a valid accepted state and ``partial``
    holds everything accepted up to it.
    """

    def __init__(self, reason, t_last, partial=None):
        super().__init__(f"{reason} (last valid time t={t_last:.17g})")
        self.reason = reason
        self.t_last = t_last
        self.partial = partial


@dataclass(frozen=True)
class KernelRHS:
    """A built-in model right-hand side: model id plus packed parameters."""

    model: int
    params: tuple

    @property
    def p(self):
        return np.asarray(self.params, dtype=np.float64)

    def __call__(self, t, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.empty_like(y)
        eval_rhs(self.model, float(t), y, self.p, out)
        return out


@dataclass(frozen=True)
class OdeProblem:
    rhs: object
    t0: float
    t_end: float
    y0: np.ndarray

    def __post_init__(self):
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=np.float64)).copy()
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t_end", float(self.t_end))
        if not self.t_end > self.t0:
            raise ValueError(f"t_end ({self.t_end}) must exceed t0 ({self.t0})")
        if y0.ndim != 1 or y0.size == 0:
            raise ValueError("y0 must be a non-empty 1-D state vector")
        if not np.all(np.isfinite(y0)):
            raise ValueError("y0 must be finite")
        if isinstance(self.rhs, KernelRHS):
            expected = MODEL_DIMS.get(self.rhs.model)
            if expected is not None and expected != y0.size:
                raise ValueError(f"model {self.rhs.model} has dimension {expected}, "
                                 f"got y0 of size {y0.size}")

    @property
    def dimension(self):
        return self.y0.size


@dataclass(frozen=True)
class SolverConfig:
    method: str = EXPLICIT
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float | None = None
    h_max: float = np.inf
    max_steps: int = 100_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (np.isfinite(self.rtol) and self.rtol >= 1e-14):
            raise ValueError(f"rtol must be >= 1e-14, got {self.rtol}")
        if not (np.isfinite(self.atol) and self.atol > 0):
            raise ValueError(f"atol must be positive, got {self.atol}")
        if self.h_init is not None and not self.h_init > 0:
            raise ValueError("h_init must be positive")
        if not self.h_max > 0:
            raise ValueError("h_max must be positive")
        if int(self.max_steps) != self.max_steps or self.max_steps <= 0:
            raise ValueError("max_steps must be a positive integer")

    def replace(self, **changes):
        return SolverConfig(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class SolverStats:
    accepted: int
    rejected: int
    rhs_evals: int
    newton_failures: int = 0
    max_error_ratio: float = 0.0

    @property
    def steps(self):
        return self.accepted + self.rejected


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    stats: SolverStats = field(default_factory=lambda: SolverStats(0, 0, 0))
    method: str = EXPLICIT

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim == 1:
            states = states[:, None]
        derivs = np.asarray(self.derivs, dtype=np.float64).reshape(states.shape)
        if times.ndim != 1 or times.size == 0 or states.shape[0] != times.size:
            raise ValueError("times and states must be non-empty and aligned")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "derivs", derivs)

    def __len__(self):
        return self.times.size

    @property
    def t0(self):
        return self.times[0]

    @property
    def t_end(self):
        return self.times[-1]

    @property
    def y0(self):
        return self.states[0]

    @property
    def y_end(self):
        return self.states[-1]

    def component(self, i):
        return self.states[:, i]


@functools.lru_cache(maxsize=None)
def _pure_loop(name):
    return _steppers.python_loop(name)


def _select_loop(method, rhs, accelerate):
    name = _LOOPS[method]
    if isinstance(rhs, KernelRHS):
        use_jit = _accel.NUMBA_ENABLED if accelerate is None else (accelerate and _accel.NUMBA_ENABLED)
        if use_jit:
            return getattr(_steppers, name), rhs.model, rhs.p
        return _pure_loop(name), rhs.model, rhs.p

    def adapter(model, t, y, p, out):
        out[:] = rhs(t, y)

    return _steppers.python_loop(name, adapter), -1, np.empty(0)


def integrate(problem: OdeProblem, config: SolverConfig | None = None, *, accelerate=None):
    """Integrate ``problem`` from ``t0`` to ``t_end``.

    Every accepted step is stored, together with the right-hand side at that
    state (used by :func:`sample` for Hermite interpolation).  ``accelerate``
    overrides the numba switch for built-in kernels (``None`` follows it).

    Raises :class:`IntegrationError` when the step budget is exhausted, the
    Newton iteration keeps diverging, or the right-hand side stops being finite.
    """
    config = config or SolverConfig()
    loop, model, p = _select_loop(config.method, problem.rhs, accelerate)
    if model == -1:
        f0 = np.asarray(problem.rhs(problem.t0, problem.y0.copy()), dtype=np.float64)
        if f0.shape != problem.y0.shape:
            raise ValueError(f"rhs returned shape {f0.shape}, expected {problem.y0.shape}")
    h_init = 0.0 if config.h_init is None else float(config.h_init)
    h_max = min(float(config.h_max), problem.t_end - problem.t0)
    times, states, derivs, raw, status, t_last = loop(
        model, p, problem.t0, problem.t_end, problem.y0, float(config.rtol),
        float(config.atol), h_init, h_max, int(config.max_steps))
    stats = SolverStats(int(raw[0]), int(raw[1]), int(raw[2]), int(raw[3]), float(raw[4]))
    traj = Trajectory(np.array(times), np.array(states), np.array(derivs), stats, config.method)
    if status != _steppers.OK:
        raise IntegrationError(_steppers.STATUS_TEXT[status], float(t_last), traj)
    return traj


def sample(traj: Trajectory, times) -> np.ndarray:
    """States at ``times`` by cubic Hermite interpolation between stored steps.

    Requested times must lie in ``[traj.t0, traj.t_end]``.  Stored nodes are
    returned exactly.  The result has shape ``(len(times), dim)`` (or ``(dim,)``
    for a scalar time).
    """
    scalar = np.ndim(times) == 0
    tq = np.atleast_1d(np.asarray(times, dtype=np.float64))
    t = traj.times
    if tq.size and (tq.min() < t[0] or tq.max() > t[-1] or not np.all(np.isfinite(tq))):
        raise ValueError(f"sample times must lie within [{t[0]}, {t[-1]}]")
    if t.size == 1:
        out = np.repeat(traj.states[:1], tq.size, axis=0)
        return out[0] if scalar else out

    idx = np.clip(np.searchsorted(t, tq, side="right") - 1, 0, t.size - 2)
    t_left = t[idx]
    h = t[idx + 1] - t_left
    theta = ((tq - t_left) / h)[:, None]
    y0, y1 = traj.states[idx], traj.states[idx + 1]
    f0, f1 = traj.derivs[idx], traj.derivs[idx + 1]
    h = h[:, None]
    h00 = (1 + 2 * theta) * (1 - theta) ** 2
    h10 = theta * (1 - theta) ** 2
    h01 = theta ** 2 * (3 - 2 * theta)
    h11 = theta ** 2 * (theta - 1)
    out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    exact = np.searchsorted(t, tq)
    hit = (exact < t.size) & (t[np.minimum(exact, t.size - 1)] == tq)
    out[hit] = traj.states[exact[hit]]
    return out[0] if scalar else out
