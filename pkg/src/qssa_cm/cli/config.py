"""Scenario definitions: built-in parameter sets and strict INI config parsing.

Config files use section headers with keys named exactly as the dataclass
fields.  Concentrations and times may be in any consistent units; rate
constants must match them (k1 per concentration per time, k_minus1 and k2 per
time).

    [scenario]
    name = my_run
    base = fig3_left          ; optional built-in to start from

    [rates]
    k1 = 1
    k_minus1 = 3
    k2 = 1

    [totals]
    E_T = 1
    X_T = 1

    [initial]                 ; optional, defaults to X = X_T, C = 0
    X = 1
    C = 0

    [solver]                  ; optional
    method = explicit
    rtol = 1e-10
    atol = 1e-12

    [run]                     ; optional
    horizon = 18
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from ..kinetics import ParameterSet, RateConstants, Totals, ValidationError
from ..qssa import cminus
from ..solver import EXPLICIT, IMPLICIT, SolverConfig

METHOD_ALIASES = {"explicit": EXPLICIT, "implicit": IMPLICIT, EXPLICIT: EXPLICIT, IMPLICIT: IMPLICIT}
DEFAULT_SOLVER = SolverConfig(rtol=1e-10, atol=1e-12, max_steps=1_000_000)


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Scenario:
    name: str
    rates: RateConstants
    totals: Totals
    X0: float | None = None
    C0: float = 0.0
    horizon: float | None = None
    solver: SolverConfig = DEFAULT_SOLVER
    # caption values as printed, keyed by derived-constant name
    caption: dict = field(default_factory=dict)
    family: str = "custom"

    @property
    def params(self):
        return ParameterSet(self.rates, self.totals)

    @property
    def initial(self):
        x0 = self.totals.X_T if self.X0 is None else self.X0
        return x0, self.C0

    @property
    def T(self):
        return default_horizon(self.params) if self.horizon is None else self.horizon

    def echo(self):
        x0, c0 = self.initial
        return {
            "name": self.name,
            "family": self.family,
            "rates": {"k1": self.rates.k1, "k_minus1": self.rates.k_minus1, "k2": self.rates.k2},
            "totals": {"E_T": self.totals.E_T, "X_T": self.totals.X_T},
            "initial": {"X": x0, "C": c0},
            "horizon": self.T,
            "solver": {"method": self.solver.method, "rtol": self.solver.rtol,
                       "atol": self.solver.atol, "max_steps": self.solver.max_steps},
        }


def default_horizon(params: ParameterSet, n_constants=3.0):
    """n slow-time constants X_T / |dXbar/dt| of the total-QSSA equation at t = 0."""
    x_t = params.totals.X_T
    return n_constants * x_t / (params.rates.k2 * cminus(x_t, params.totals.E_T, params.derived.K_M))


def _builtin(name, family, k1, k_minus1, k2, E_T, X_T, caption):
    return Scenario(name, RateConstants(k1, k_minus1, k2), Totals(E_T, X_T),
                    caption=caption, family=family)


BUILTIN = {s.name: s for s in (
    # rates as printed; they give K = 1 and eps = 0.0024, not the printed K = 4, eps = 0.01
    _builtin("fig1_literal", "fig1", 1, 4, 1, 89, 100,
             {"K_M": "5", "K": "4", "eps_SS": "0.85", "eps_TQ": "0.01"}),
    # k2 and k_minus1 swapped so that K_M = 5, K = 4 and eps = 0.01 all hold
    _builtin("fig1_consistent", "fig1", 1, 1, 4, 89, 100,
             {"K_M": "5", "K": "4", "eps_SS": "0.85", "eps_TQ": "0.01"}),
    _builtin("fig2_left", "fig2", 0.1, 0.01, 10, 0.1, 50,
             {"K_M": "100.1", "K": "100", "eps_HTA": "0.002", "eps_SS": "0.0007"}),
    _builtin("fig2_right", "fig2", 1, 0.1, 1, 0.1, 1,
             {"K_M": "1.1", "K": "1", "eps_HTA": "0.1", "eps_SS": "0.05"}),
    _builtin("fig3_left", "fig3", 1, 3, 1, 1, 1,
             {"K_M": "4", "K": "1", "eps_HTA": "1", "eps_SS": "0.2", "eps_TQ": "0.03"}),
    _builtin("fig3_right", "fig3", 0.1, 0.01, 10, 400, 100,
             {"K_M": "100.1", "K": "100", "eps_HTA": "4", "eps_SS": "2", "eps_TQ": "0.11"}),
)}


def caption_warnings(scenario: Scenario):
    """Printed caption values that the rates do not reproduce (to the printed precision)."""
    derived = scenario.params.derived
    out = []
    for key, text in scenario.caption.items():
        printed = float(text)
        decimals = len(text.split(".")[1]) if "." in text else 0
        actual = getattr(derived, key)
        if round(actual, decimals) != printed:
            out.append(f"{scenario.name}: caption gives {key}={text} but the rate constants "
                       f"give {key}={actual:.6g}")
    return out


def builtin(name) -> Scenario:
    try:
        return BUILTIN[name]
    except KeyError:
        raise ConfigError("scenario", f"unknown scenario {name!r}; "
                                      f"choose from {sorted(BUILTIN)}") from None


_SCHEMA = {
    "scenario": {"name": str, "base": str},
    "rates": {"k1": float, "k_minus1": float, "k2": float},
    "totals": {"E_T": float, "X_T": float},
    "initial": {"X": float, "C": float},
    "solver": {"method": str, "rtol": float, "atol": float, "max_steps": int, "h_max": float},
    "run": {"horizon": float},
}


def _convert(section, key, raw):
    kind = _SCHEMA[section][key]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"expected {kind.__name__}, got {raw!r}") from None


def parse_config_text(text, source="<config>") -> Scenario:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"),
                                       interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError("config", str(err).splitlines()[0]) from None
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, f"unknown section; expected one of {sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            values[(section, key)] = _convert(section, key, raw)

    base = values.get(("scenario", "base"))
    scenario = builtin(base) if base else None
    try:
        rates = _group(values, "rates", ("k1", "k_minus1", "k2"), scenario and scenario.rates)
        totals = _group(values, "totals", ("E_T", "X_T"), scenario and scenario.totals)
        rates, totals = RateConstants(**rates), Totals(**totals)
    except ValidationError as err:
        raise ConfigError(err.field, str(err).split(": ", 1)[1]) from None

    solver = scenario.solver if scenario else DEFAULT_SOLVER
    changes = {k: values[("solver", k)] for k in ("rtol", "atol", "max_steps", "h_max")
               if ("solver", k) in values}
    if ("solver", "method") in values:
        method = values[("solver", "method")]
        if method not in METHOD_ALIASES:
            raise ConfigError("solver.method", f"expected explicit or implicit, got {method!r}")
        changes["method"] = METHOD_ALIASES[method]
    try:
        solver = solver.replace(**changes)
    except ValueError as err:
        raise ConfigError("solver", str(err)) from None

    name = values.get(("scenario", "name"), base or "custom")
    out = Scenario(name, rates, totals, solver=solver,
                   caption=scenario.caption if scenario and _same(scenario, rates, totals) else {},
                   family=scenario.family if scenario else "custom")
    if ("initial", "X") in values:
        out = replace(out, X0=values[("initial", "X")])
    if ("initial", "C") in values:
        out = replace(out, C0=values[("initial", "C")])
    if ("run", "horizon") in values:
        out = replace(out, horizon=values[("run", "horizon")])
    return validate(out)


def _same(scenario, rates, totals):
    return scenario.rates == rates and scenario.totals == totals


def _group(values, section, keys, fallback):
    out = {}
    for key in keys:
        if (section, key) in values:
            out[key] = values[(section, key)]
        elif fallback is not None:
            out[key] = getattr(fallback, key)
        else:
            raise ConfigError(f"{section}.{key}", "missing required key")
    return out


def validate(scenario: Scenario) -> Scenario:
    x0, c0 = scenario.initial
    t = scenario.totals
    if x0 < 0 or c0 < 0:
        raise ConfigError("initial", "concentrations must be non-negative")
    if c0 > t.E_T or x0 + c0 > t.X_T * (1 + 1e-12):
        raise ConfigError("initial", "initial state violates C <= E_T or X + C <= X_T")
    if scenario.horizon is not None and not scenario.horizon > 0:
        raise ConfigError("run.horizon", "must be positive")
    return scenario


def parse_config(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError("config", f"cannot read {path}: {err.strerror}") from None
    return parse_config_text(text, source=str(path))
