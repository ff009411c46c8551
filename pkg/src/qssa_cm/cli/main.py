"""Command-line entry point.

    qssa-cm simulate  [--scenario NAME | --config FILE]
    qssa-cm reduce    [--scenario NAME | --config FILE]
    qssa-cm manifold  --model hta|tq [--kappa K --lambda L | --sigma S --eta E --kappa-m KM]
    qssa-cm tihonov   [--analysis layer,tube,sweep,kw]
    qssa-cm figure    1|2|3 [left|right]
    qssa-cm sweep     --model hta|tq [--eps-list 1e-1,1e-2,...]

Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, replace

import numpy as np

from .. import manifold as cm
from ..kinetics import NondimHTA, NondimTQ, ValidationError, conservation_residuals
from ..models import full_mm_problem, hta_system, lumped_problem, tq_system
from ..qssa import (RootError, cminus, cminus_residual, solve_reduced, sqssa_complex, sqssa_v,
                    tihonov_root, tq_root_nondim)
from ..solver import IntegrationError, integrate, sample
from .. import tihonov as th
from .config import METHOD_ALIASES, ConfigError, Scenario, builtin, caption_warnings, parse_config
from .output import Artifact, RunReport, emit_outputs

FORMATS = ("csv", "json", "svg")
DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _common(p):
    p.add_argument("--config", help="INI scenario file")
    p.add_argument("--scenario", help="built-in scenario name")
    p.add_argument("--out", default="qssa_out", help="output directory")
    p.add_argument("--format", default="csv,json", help="comma list of csv,json,svg")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--method", choices=("explicit", "implicit"))
    p.add_argument("--horizon", type=float, help="final time (dimensional)")


def _model_args(p):
    p.add_argument("--model", choices=("hta", "tq"), default="hta")
    p.add_argument("--kappa", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--kappa-m", dest="kappa_m", type=float)
    p.add_argument("--eps", type=float)


def build_parser():
    parser = _Parser(prog="qssa-cm", description="QSSA and center-manifold reductions "
                                                  "of Michaelis-Menten kinetics")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("simulate", help="full and lumped trajectories"))
    _common(sub.add_parser("reduce", help="sQSSA and tQSSA reduced solutions"))
    p = sub.add_parser("manifold", help="center-manifold coefficients and checks")
    _common(p)
    _model_args(p)
    p = sub.add_parser("tihonov", help="boundary layer, mu-tube, eps sweep, K_W")
    _common(p)
    p.add_argument("--analysis", default="layer,tube,sweep,kw")
    p.add_argument("--mu", type=float, default=0.05)
    p = sub.add_parser("figure", help="comparison dataset for a built-in figure set")
    _common(p)
    p.add_argument("number", type=int, choices=(1, 2, 3))
    p.add_argument("side", nargs="?", choices=("left", "right"))
    p = sub.add_parser("sweep", help="full-vs-reduced errors over an eps grid")
    _common(p)
    _model_args(p)
    p.add_argument("--eps-list", default=",".join(f"{e:g}" for e in DEFAULT_EPS))
    return parser


def _formats(text):
    out = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in out if f not in FORMATS]
    if bad or not out:
        raise ConfigError("format", f"unknown format(s) {bad}; choose from {FORMATS}")
    return out


def resolve_scenario(args, default="fig3_left") -> Scenario:
    if args.config and args.scenario:
        raise ConfigError("scenario", "give either --config or --scenario, not both")
    if args.config:
        scenario = parse_config(args.config)
    else:
        scenario = builtin(args.scenario or default)
    changes = {}
    if args.rtol is not None:
        changes["rtol"] = args.rtol
    if args.atol is not None:
        changes["atol"] = args.atol
    if args.method is not None:
        changes["method"] = METHOD_ALIASES[args.method]
    try:
        solver = scenario.solver.replace(**changes)
    except ValueError as err:
        raise ConfigError("solver", str(err)) from None
    scenario = replace(scenario, solver=solver)
    if args.horizon is not None:
        if not args.horizon > 0:
            raise ConfigError("horizon", "must be positive")
        scenario = replace(scenario, horizon=args.horizon)
    return scenario


def output_grid(T, n_uniform=401, n_log=200):
    """Uniform grid on [0, T] merged with a log-spaced one that resolves the transient."""
    return np.union1d(np.linspace(0.0, T, n_uniform), np.geomspace(T * 1e-6, T, n_log))


def _report(command, scenario):
    derived = asdict(scenario.params.derived)
    derived.update(kappa=scenario.params.hta.kappa, lam=scenario.params.hta.lam,
                   sigma=scenario.params.tq.sigma, eta=scenario.params.tq.eta,
                   kappa_m=scenario.params.tq.kappa_m)
    return RunReport(command, scenario.echo(), derived, warnings=caption_warnings(scenario))


def _stats(traj):
    s = traj.stats
    return {"accepted": s.accepted, "rejected": s.rejected, "rhs_evals": s.rhs_evals}


def _full(scenario, T=None):
    T = scenario.T if T is None else T
    return integrate(full_mm_problem(scenario.params, T, y0=scenario.initial), scenario.solver)


def cmd_simulate(args, scenario):
    params, T = scenario.params, scenario.T
    x0, c0 = scenario.initial
    full = _full(scenario)
    lumped = integrate(lumped_problem(params, T, y0=(x0 + c0, c0)), scenario.solver)
    t = output_grid(T)
    yf, yl = sample(full, t), sample(lumped, t)
    report = _report("simulate", scenario)
    cons = conservation_residuals(full, params.rates, params.totals)
    report.metrics = {
        "conservation": {"substrate": cons[0], "enzyme": cons[1]},
        "lumped_vs_full_max": float(np.max(np.abs(yl[:, 0] - yf[:, 0] - yf[:, 1]))),
        "full_solver": _stats(full), "lumped_solver": _stats(lumped),
        "final": {"X": yf[-1, 0], "C": yf[-1, 1]},
    }
    columns = {"t": t, "X": yf[:, 0], "C": yf[:, 1], "Xbar": yl[:, 0], "C_lumped": yl[:, 1]}
    plots = {
        "_time": ([("X", t, yf[:, 0]), ("C", t, yf[:, 1]), ("Xbar", t, yl[:, 0])],
                  f"{scenario.name}: full system", "t", "concentration"),
        "_phase": ([("full", yf[:, 0], yf[:, 1])], f"{scenario.name}: phase plane", "X", "C"),
    }
    return report, Artifact(f"simulate_{scenario.name}", {"": columns}, plots)


def cmd_reduce(args, scenario):
    params, T = scenario.params, scenario.T
    x0, c0 = scenario.initial
    sq = solve_reduced("sqssa", params, x0, T, scenario.solver)
    tq = solve_reduced("tqssa", params, x0 + c0, T, scenario.solver)
    t = output_grid(T)
    xs, xt = sample(sq.trajectory, t)[:, 0], sample(tq.trajectory, t)[:, 0]
    e_t, k_m = params.totals.E_T, params.derived.K_M
    cs, ct = sqssa_complex(xs, e_t, k_m), cminus(xt, e_t, k_m)
    res, scale = cminus_residual(xt, ct, e_t, k_m)
    report = _report("reduce", scenario)
    report.metrics = {
        "sqssa": {"final_X": xs[-1], "solver": _stats(sq.trajectory)},
        "tqssa": {"final_Xbar": xt[-1], "solver": _stats(tq.trajectory),
                  "max_root_residual_over_scale": float(np.max(np.abs(res) / scale))},
    }
    columns = {"t": t, "X_sqssa": xs, "C_sqssa": cs, "Xbar_tqssa": xt, "C_tqssa": ct}
    plots = {"_time": ([("X sQSSA", t, xs), ("Xbar tQSSA", t, xt), ("C sQSSA", t, cs),
                        ("C tQSSA", t, ct)], f"{scenario.name}: reductions", "t", "concentration")}
    return report, Artifact(f"reduce_{scenario.name}", {"": columns}, plots)


def _nondim_from_args(args, scenario):
    """Model parameters from explicit flags, else from the scenario's scaling."""
    if args.model == "hta":
        if args.kappa is not None or args.lam is not None:
            if args.kappa is None or args.lam is None:
                raise ConfigError("hta", "--kappa and --lambda go together")
            return NondimHTA(args.kappa, args.lam, args.eps if args.eps is not None else 0.01)
        p = scenario.params.hta
        return p if args.eps is None else replace(p, eps=args.eps)
    flags = (args.sigma, args.eta, args.kappa_m)
    if any(f is not None for f in flags):
        if any(f is None for f in flags):
            raise ConfigError("tq", "--sigma, --eta and --kappa-m go together")
        return NondimTQ.from_fractions(*flags, args.eps if args.eps is not None else 0.01)
    p = scenario.params.tq
    return p if args.eps is None else replace(p, eps=args.eps)


def cmd_manifold(args, scenario):
    p = _nondim_from_args(args, scenario)
    if args.model == "hta":
        sp, partials = hta_system(p), cm.hta_partials(p)
        root = lambda u: sqssa_v(u, p.kappa)  # noqa: E731
    else:
        sp, partials = tq_system(p), cm.tq_partials(p)
        root = lambda u: tq_root_nondim(u, p)  # noqa: E731
    closed = cm.coeffs_closed_form(args.model, p)
    general = cm.coeffs_general(partials, sp.a, sp.b)
    estimated = cm.coeffs_general(cm.estimate_partials(sp), sp.a, sp.b)
    rho = np.geomspace(1e-4, 1e-2, 9)
    bumped = replace(closed, lambda1=closed.lambda1 + 0.1)
    res = np.array([abs(cm.manifold_residual(sp, closed, r, r)) for r in rho])
    res_bad = np.array([abs(cm.manifold_residual(sp, bumped, r, r)) for r in rho])
    u = np.linspace(0.0, 1.0, 101)
    v_root = np.array([tihonov_root(sp, x).v for x in u])
    equiv = cm.asymptotic_compare(closed, lambda x: np.asarray(root(x)), rho)

    report = RunReport("manifold", scenario.echo() if args.kappa is None and args.sigma is None
                       else {"name": f"custom_{args.model}"})
    report.derived = {k: float(v) for k, v in asdict(p).items()}
    report.metrics = {
        "model": args.model,
        "coefficients": {"lambda1": closed.lambda1, "lambda2": closed.lambda2,
                         "lambda3": closed.lambda3},
        "coefficients_general": list(general.as_tuple()),
        "coefficients_estimated": list(estimated.as_tuple()),
        "validity_radius": closed.validity_radius,
        "residual_slope": cm.fit_order(rho, res),
        "residual_slope_perturbed": cm.fit_order(rho, res_bad),
        "equivalence_order": equiv.relative_order,
        "equivalent": equiv.equivalent,
        "reduced_field_linear": float(-(sp.b / sp.a) * closed.lambda2),
    }
    if not closed.within_validity(u, p.eps):
        report.warnings.append(f"reconstruction grid reaches outside the validity radius "
                               f"{closed.validity_radius:.3g}")
    tables = {
        "_residual": {"rho": rho, "residual": res, "residual_perturbed": res_bad},
        "_reconstruction": {"u": u, "v_root": v_root, "v_cm0": cm.reconstruct_v(closed, u, 0.0),
                            "v_cm1": cm.reconstruct_v(closed, u, p.eps)},
    }
    plots = {"_reconstruction": ([("root", u, v_root),
                                  ("cm order 0", u, cm.reconstruct_v(closed, u, 0.0)),
                                  ("cm order 1", u, cm.reconstruct_v(closed, u, p.eps))],
                                 f"{args.model} manifold", "u", "v")}
    return report, Artifact(f"manifold_{args.model}", tables, plots)


def cmd_tihonov(args, scenario):
    wanted = {a.strip() for a in args.analysis.split(",") if a.strip()}
    unknown = wanted - {"layer", "tube", "sweep", "kw"}
    if unknown:
        raise ConfigError("analysis", f"unknown analyses {sorted(unknown)}")
    params = scenario.params
    report = _report("tihonov", scenario)
    tables = {}
    if "layer" in wanted:
        out = {}
        for name, sp in (("hta", hta_system(params.hta)), ("tq", tq_system(params.tq))):
            bl = th.boundary_layer_converges(sp, 1.0, 0.0, 40.0 / abs(sp.b))
            out[name] = {"converged": bl.converged, "limit": bl.limit, "root": bl.root}
        report.metrics["boundary_layer"] = out
    if "tube" in wanted:
        hta = params.hta
        trial = th.hta_tube_trial(hta.kappa, hta.lam, eps=hta.eps, mu=args.mu)
        report.metrics["mu_tube"] = trial._asdict()
    if "sweep" in wanted:
        sweep = th.epsilon_sweep("hta", params.hta)
        report.metrics["eps_sweep"] = _sweep_metrics(sweep)
        tables["_sweep"] = _sweep_table(sweep)
    if "kw" in wanted:
        alpha, _ = th.kw_constants(params.rates, params.totals)
        traj = _full(scenario, T=scenario.T + 8.0 / alpha)
        kw = th.kw_analysis(params.rates, params.totals, traj)
        report.metrics["kw"] = {"alpha": kw.alpha, "K_W": kw.K_W, "K_D": kw.K_D, "K_M": kw.K_M,
                                "empirical_limit": kw.empirical_limit,
                                "relative_gap": kw.relative_gap, "bracket_ok": kw.bracket_ok,
                                "window": list(kw.window)}
    return report, Artifact(f"tihonov_{scenario.name}", tables)


def _sweep_metrics(sweep):
    return {"model": sweep.model, "eps": sweep.eps, "slow_errors": sweep.slow_errors,
            "fast_errors": sweep.fast_errors, "slope": sweep.slope,
            "fast_slope": sweep.fast_slope, "T": sweep.T,
            "slow_decreasing": sweep.strictly_decreasing("slow"),
            "fast_decreasing": sweep.strictly_decreasing("fast")}


def _sweep_table(sweep):
    return {"eps": sweep.eps, "t1": sweep.t1, "slow_error": sweep.slow_errors,
            "fast_error": sweep.fast_errors}


def cmd_sweep(args, scenario):
    try:
        eps = tuple(float(e) for e in args.eps_list.split(","))
    except ValueError:
        raise ConfigError("eps-list", f"cannot parse {args.eps_list!r}") from None
    if args.eps is not None:
        raise ConfigError("eps", "use --eps-list for sweeps")
    args.eps = eps[0]
    base = _nondim_from_args(args, scenario)
    sweep = th.epsilon_sweep(args.model, base, eps)
    report = RunReport("sweep", scenario.echo(), {k: float(v) for k, v in asdict(base).items()})
    report.metrics = _sweep_metrics(sweep)
    plots = {"_errors": ([("slow", np.log10(sweep.eps), np.log10(sweep.slow_errors)),
                          ("fast", np.log10(sweep.eps), np.log10(sweep.fast_errors))],
                         f"{args.model} eps sweep", "log10 eps", "log10 sup error")}
    return report, Artifact(f"sweep_{args.model}", {"": _sweep_table(sweep)}, plots)


def cmd_figure(args, scenario):
    params, T = scenario.params, scenario.T
    x0, c0 = scenario.initial
    full = _full(scenario)
    sq = solve_reduced("sqssa", params, x0, T, scenario.solver)
    tq = solve_reduced("tqssa", params, x0 + c0, T, scenario.solver)
    t = output_grid(T)
    y = sample(full, t)
    x, c = y[:, 0], y[:, 1]
    xbar = x + c
    xs, xt = sample(sq.trajectory, t)[:, 0], sample(tq.trajectory, t)[:, 0]
    e_t, k_m = params.totals.E_T, params.derived.K_M
    cs, ct = sqssa_complex(xs, e_t, k_m), cminus(xt, e_t, k_m)
    n = args.number
    report = _report(f"figure {n}" + (f" {args.side}" if args.side else ""), scenario)
    if scenario.family not in (f"fig{n}", "custom"):
        report.warnings.append(f"scenario {scenario.name} belongs to {scenario.family}, "
                               f"not figure {n}")
    title = f"{scenario.name}"
    if n == 1:
        cm_orders, arg = None, "Xbar"
        panels = {
            "left": {"t": t, "C_full": c, "C_sqssa": cs, "C_tqssa": ct},
            "right": {"t": t, "X_full": x, "X_sqssa": xs, "X_tqssa": xt - ct},
        }
        # without a side each panel gets its own table
        tables = {"": panels[args.side]} if args.side else {f"_{k}": v for k, v in panels.items()}
        plots = {"_complex": ([("full", t, c), ("sQSSA", t, cs), ("tQSSA", t, ct)],
                              f"{title}: complexes", "t", "C"),
                 "_substrate": ([("full", t, x), ("sQSSA", t, xs), ("tQSSA", t, xt - ct)],
                                f"{title}: substrates", "t", "X")}
    elif n == 2:
        cm_orders, arg = th.hta_cm_reconstructions(params), "X"
        c0m, c1m = cm_orders["cm0"](x), cm_orders["cm1"](x)
        tables = {"": {"t": t, "X_full": x, "C_full": c, "X_sqssa": xs, "C_sqssa": cs,
                       "C_cm0": c0m, "C_cm1": c1m}}
        plots = {"_phase": ([("full", x, c), ("sQSSA", x, sqssa_complex(x, e_t, k_m)),
                             ("cm order 0", x, c0m), ("cm order 1", x, c1m)],
                            f"{title}: phase plane", "X", "C"),
                 "_time": ([("X full", t, x), ("C full", t, c), ("X sQSSA", t, xs),
                            ("C sQSSA", t, cs)], f"{title}: time series", "t", "concentration")}
    else:
        cm_orders, arg = th.tq_cm_reconstructions(params), "Xbar"
        c0m, c1m = cm_orders["cm0"](xbar), cm_orders["cm1"](xbar)
        tables = {"": {"t": t, "Xbar_full": xbar, "C_full": c, "Xbar_tqssa": xt,
                       "C_tqssa": ct, "C_cm0": c0m, "C_cm1": c1m}}
        plots = {"_phase": ([("full", xbar, c), ("tQSSA", xbar, cminus(xbar, e_t, k_m)),
                             ("cm order 0", xbar, c0m), ("cm order 1", xbar, c1m)],
                            f"{title}: phase plane", "Xbar", "C"),
                 "_time": ([("Xbar full", t, xbar), ("C full", t, c), ("Xbar tQSSA", t, xt),
                            ("C tQSSA", t, ct)], f"{title}: time series", "t", "concentration")}
    rep = th.approximation_report(full, sq, tq, params, cm_orders, arg)
    report.metrics = {"t_transient": rep.t_transient, "horizon": rep.horizon,
                      "peak_C": float(np.max(c)), **rep.metrics}
    stem = f"figure{n}" + (f"_{args.side}" if args.side else "")
    return report, Artifact(stem, tables, plots)


COMMANDS = {"simulate": cmd_simulate, "reduce": cmd_reduce, "manifold": cmd_manifold,
            "tihonov": cmd_tihonov, "figure": cmd_figure, "sweep": cmd_sweep}


def _default_scenario(args):
    if args.command != "figure":
        return "fig3_left"
    if args.number == 1:
        return "fig1_consistent"
    return f"fig{args.number}_{args.side or 'left'}"


def run_command(argv):
    """Run one command; returns (exit_code, RunReport or None)."""
    try:
        args = build_parser().parse_args(argv)
        formats = _formats(args.format)
        scenario = resolve_scenario(args, _default_scenario(args))
        report, artifact = COMMANDS[args.command](args, scenario)
        emit_outputs(report, artifact, args.out, formats)
    except (ConfigError, ValidationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1, None
    except (IntegrationError, RootError, th.SweepError, ArithmeticError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2, None
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1, None
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0, report


def main(argv=None):
    code, report = run_command(sys.argv[1:] if argv is None else argv)
    if report is not None:
        for name in report.manifest:
            print(name)
    return code


if __name__ == "__main__":
    sys.exit(main())
