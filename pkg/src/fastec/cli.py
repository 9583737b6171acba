"""Command-line entry point: ``fastec <command> [options]``.

Commands: ``fit``, ``tune``, ``simulate``, ``factorize``, ``curves``,
``samcvar``.  Any option can also come from a JSON file given with
``--config`` (keys are option names with dashes as underscores); explicit
flags take precedence.

Exit status is 0 on success, 2 for bad input and 3 when a numerical kernel
fails (SVD non-convergence or a non-finite iterate).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FastecError, NonConvergence, NonFinite
from .factorization import factor_scores, factorize
from .fileio import (
    load_json, load_model, model_document, read_labeled, read_matrix, save_json,
    write_csv, write_matrix, write_records,
)
from .samcvar import ReturnPanel, build_caviar_features, contribution_table, fit_samcvar, log_returns, var_forecast
from .simgen import PIVOTAL, RESULT_COLUMNS, SimSpec, StudyConfig, long_format, run_study
from .solver import SolverConfig, Termination, fit
from .spline_curves import (
    SplineBasis, build_design, default_basis_size, detrend_mean_curve, factor_curves, fit_quantile_curves,
)
from .tuning import SCORES, PivotalConfig, pivotal_draws, pivotal_lambda

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

LONG_COLUMNS = ("model", "rep", "tau", "lambda_rule", "lambda", "metric", "value")


class InputError(Exception):
    pass


def _read(reader, *a, **kw):
    """Run a file reader, reporting any failure as an input error."""
    try:
        return reader(*a, **kw)
    except (FastecError, OSError, ValueError) as exc:
        raise InputError(str(exc)) from None


# -- argument groups -------------------------------------------------------

def _solver_args(p, epsilon=None):
    g = p.add_argument_group("solver")
    g.add_argument("--tau", type=float, default=0.5, help="quantile level in (0, 1)")
    g.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="nuclear-norm penalty (default: pivotal tuning)")
    g.add_argument("--epsilon", type=float, default=epsilon, help="target accuracy (sets kappa)")
    g.add_argument("--kappa", type=float, default=None, help="smoothing level, overrides --epsilon")
    g.add_argument("--max-iters", type=int, default=None)
    g.add_argument("--loss-tol", type=float, default=None)


def _pivotal_args(p):
    g = p.add_argument_group("pivotal tuning")
    g.add_argument("--n-sim", type=int, default=None, help="number of simulated score matrices")
    g.add_argument("--alpha", type=float, default=None, help="penalty is the (1-alpha) quantile")
    g.add_argument("--multiplier", type=float, default=None)
    g.add_argument("--score", choices=SCORES, default=None)
    g.add_argument("--antithetic", action="store_true", default=None)
    g.add_argument("--seed", type=int, default=0)


def _common(p):
    p.add_argument("--config", default=None, help="JSON file with option values")
    p.add_argument("--threads", type=int, default=1, help="maximum worker threads")


def build_parser(config_defaults=None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastec", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a penalized multivariate quantile regression")
    p.add_argument("--x", required=True, help="design CSV (n x p)")
    p.add_argument("--y", required=True, help="response CSV (n x m)")
    p.add_argument("--header", action="store_true", help="CSV inputs have a header row")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--quantiles", default=None, help="fitted-quantile CSV path")
    _solver_args(p)
    _pivotal_args(p)
    _common(p)

    p = sub.add_parser("tune", help="pivotal penalty for a design")
    p.add_argument("--x", required=True)
    p.add_argument("--header", action="store_true")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--y", default=None, help="response CSV (only its width is used)")
    src.add_argument("--m", type=int, default=None, help="number of responses")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--draws", default=None, help="CSV for the simulated statistics")
    _pivotal_args(p)
    _common(p)

    p = sub.add_parser("simulate", help="Monte Carlo study on a simulation design")
    p.add_argument("--model", required=True, choices=["LS", "MS", "ES", "AES", "AMS"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--taus", default="0.05,0.2,0.5,0.8,0.95", help="comma-separated levels")
    p.add_argument("--lambdas", default=PIVOTAL, help="comma-separated penalties or 'pivotal'")
    p.add_argument("--drop-threshold", type=float, default=None)
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--long", default=None, help="long-format CSV for plotting")
    p.add_argument("--no-timing", action="store_true", default=None,
                   help="write 0 in the seconds column (reproducible output)")
    g = p.add_argument_group("solver")
    g.add_argument("--epsilon", type=float, default=None)
    g.add_argument("--kappa", type=float, default=None)
    g.add_argument("--max-iters", type=int, default=None)
    g.add_argument("--loss-tol", type=float, default=None)
    _pivotal_args(p)
    _common(p)

    p = sub.add_parser("factorize", help="factors, loadings and contributions of a model")
    p.add_argument("--model", required=True, help="model JSON from 'fit'")
    p.add_argument("--x", default=None, help="design CSV for factor time series")
    p.add_argument("--header", action="store_true")
    p.add_argument("--drop-threshold", type=float, default=None)
    p.add_argument("--components", type=int, default=None,
                   help="number of factors to write (default: detected rank)")
    p.add_argument("--out-dir", required=True)
    _common(p)

    p = sub.add_parser("curves", help="factorisable quantile curves on a spline basis")
    p.add_argument("--data", required=True, help="CSV: time column then one column per series")
    p.add_argument("--header", action="store_true")
    p.add_argument("--n-basis", type=int, default=None, help="default ceil(n^0.4)")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--grid", type=int, default=101, help="number of output grid points")
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    p.add_argument("--detrend", action="store_true", default=None,
                   help="remove a regression-spline mean curve first")
    p.add_argument("--drop-threshold", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    _solver_args(p)
    _pivotal_args(p)
    _common(p)

    p = sub.add_parser("samcvar", help="multivariate CAViaR-type quantile model")
    p.add_argument("--data", required=True, help="CSV: header of firm names, first column dates")
    p.add_argument("--input", choices=["returns", "prices"], default="returns")
    p.add_argument("--intercept", action="store_true", default=None)
    p.add_argument("--drop-threshold", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    _solver_args(p)
    _pivotal_args(p)
    _common(p)
    p.set_defaults(tau=0.05)

    if config_defaults:
        command, values = config_defaults
        target = sub.choices[command]
        known = {a.dest for a in target._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InputError(f"unknown config keys for {command}: {', '.join(unknown)}")
        target.set_defaults(**values)
    return parser


def _config_values(path) -> dict:
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: config must be a JSON object")
    values = {k.replace("-", "_"): v for k, v in doc.items()}
    if "lambda" in values:
        values["lam"] = values.pop("lambda")
    values.pop("config", None)
    values.pop("command", None)
    return values


def parse_args(argv=None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    if args.config is None:
        return args
    values = _config_values(args.config)
    return build_parser((args.command, values)).parse_args(argv)


# -- config helpers --------------------------------------------------------

def _pick(value, default):
    return default if value is None else value


def solver_config(args, base: SolverConfig = SolverConfig()) -> SolverConfig:
    return SolverConfig(
        tau=getattr(args, "tau", base.tau),
        lam=0.0,
        epsilon=_pick(args.epsilon, base.epsilon),
        kappa=_pick(args.kappa, base.kappa),
        max_iters=_pick(args.max_iters, base.max_iters),
        loss_tol=_pick(args.loss_tol, base.loss_tol),
    )


def pivotal_config(args, base: PivotalConfig = PivotalConfig()) -> PivotalConfig:
    return PivotalConfig(
        n_sim=_pick(args.n_sim, base.n_sim),
        alpha=_pick(args.alpha, base.alpha),
        seed=args.seed,
        multiplier=_pick(args.multiplier, base.multiplier),
        score=_pick(args.score, base.score),
        antithetic=bool(_pick(args.antithetic, base.antithetic)),
    )


def _penalty(args, X, m, tau):
    """Return ``(lam, metadata)``; tunes by the pivotal rule when no value was given."""
    if args.lam is not None:
        return float(args.lam), {"lambda_source": "user"}
    piv = pivotal_config(args)
    lam = pivotal_lambda(X, m, tau, piv, workers=args.threads)
    return lam, {"lambda_source": "pivotal", "pivotal": dataclasses.asdict(piv)}


def _warn_maxiters(res):
    if res.termination is Termination.MAX_ITERS:
        print(f"warning: stopped after max_iters={res.iterations} iterations", file=sys.stderr)


def _out_dir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _cols(prefix, k):
    return [f"{prefix}{i + 1}" for i in range(k)]


# -- commands --------------------------------------------------------------

def cmd_fit(args) -> int:
    X, _ = _read(read_matrix, args.x, args.header)
    Y, ynames = _read(read_matrix, args.y, args.header)
    cfg = solver_config(args)
    lam, meta = _penalty(args, X, Y.shape[1], cfg.tau)
    res = fit(X, Y, dataclasses.replace(cfg, lam=lam))
    _warn_maxiters(res)
    fm = factorize(res.gamma_hat)
    save_json(args.out, model_document(res, X.shape[0], fm, **meta))
    if args.quantiles:
        write_matrix(args.quantiles, X @ res.gamma_hat, ynames or _cols("q", Y.shape[1]))
    print(f"lambda={lam:.17g} objective={res.objective:.17g} iterations={res.iterations} rank={fm.rank}")
    return EXIT_OK


def cmd_tune(args) -> int:
    X, _ = _read(read_matrix, args.x, args.header)
    if args.y is not None:
        m = _read(read_matrix, args.y, args.header)[0].shape[1]
    else:
        m = args.m
    piv = pivotal_config(args)
    draws = pivotal_draws(X, m, args.tau, piv, workers=args.threads)
    lam = float(piv.multiplier * np.quantile(draws, 1.0 - piv.alpha))
    if args.draws:
        write_csv(args.draws, ["draw", "statistic"], enumerate(draws.tolist()))
    print(f"{lam:.17g}")
    return EXIT_OK


def _parse_list(text, allow_pivotal=False):
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if allow_pivotal and item == PIVOTAL:
            out.append(PIVOTAL)
        else:
            try:
                out.append(float(item))
            except ValueError:
                raise InputError(f"bad list entry {item!r}") from None
    if not out:
        raise InputError("empty list")
    return out


def cmd_simulate(args) -> int:
    base = StudyConfig()
    cfg = StudyConfig(
        solver=solver_config(args, base.solver),
        pivotal=pivotal_config(args, base.pivotal),
        drop_threshold=args.drop_threshold,
        timing=not args.no_timing,
    )
    spec = SimSpec(args.model, n=args.n, p=args.p, m=args.m, seed=args.seed)
    taus = _parse_list(args.taus)
    lambdas = _parse_list(args.lambdas, allow_pivotal=True)
    rows = run_study(spec, taus, lambdas, args.reps, cfg, workers=args.threads)
    write_records(args.out, rows, RESULT_COLUMNS)
    if args.long:
        write_records(args.long, long_format(rows, spec.model.value), LONG_COLUMNS)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_factorize(args) -> int:
    doc = _read(load_model, args.model)
    fm = factorize(doc["gamma"], args.drop_threshold)
    k = fm.rank if args.components is None else args.components
    if not 0 <= k <= len(fm.singular_values):
        raise InputError(f"--components must lie in [0, {len(fm.singular_values)}]")
    out = _out_dir(args.out_dir)
    names = _cols("factor", k)
    write_csv(out / "singular_values.csv", ["index", "sigma"],
              ((i + 1, s) for i, s in enumerate(fm.singular_values.tolist())))
    write_matrix(out / "loadings.csv", fm.loadings[:, :k], names,
                 index=range(1, fm.m + 1), index_name="response")
    contrib = (fm.left_vectors[:, :k] * fm.singular_values[:k])
    write_matrix(out / "contributions.csv", contrib, names,
                 index=range(1, fm.p + 1), index_name="covariate")
    if args.x:
        X, _ = _read(read_matrix, args.x, args.header)
        write_matrix(out / "factors.csv", factor_scores(fm, X, k), names,
                     index=range(1, X.shape[0] + 1), index_name="row")
    save_json(out / "svd.json", dict(fm.to_dict(), components=k))
    print(f"rank={fm.rank}")
    return EXIT_OK


def cmd_curves(args) -> int:
    labels, Y, names = _read(read_labeled, args.data, args.header)
    try:
        t = np.array([float(v) for v in labels])
    except ValueError:
        raise InputError("time column must be numeric") from None
    m = Y.shape[1]
    n_basis = default_basis_size(len(t)) if args.n_basis is None else args.n_basis
    trend = None
    if args.detrend:
        trend, Y = detrend_mean_curve(t, Y, n_basis, args.degree)
    cfg = solver_config(args)
    B = build_design(t, SplineBasis.uniform(t.min(), t.max(), n_basis, args.degree))
    lam, meta = _penalty(args, B, m, cfg.tau)
    model, res = fit_quantile_curves(t, Y, cfg.tau, lam, cfg, n_basis=n_basis, degree=args.degree,
                                     drop_threshold=args.drop_threshold)
    _warn_maxiters(res)
    lo = t.min() if args.grid_min is None else args.grid_min
    hi = t.max() if args.grid_max is None else args.grid_max
    grid = np.linspace(lo, hi, args.grid)
    out = _out_dir(args.out_dir)
    write_matrix(out / "quantile_curves.csv", model.quantile_curves(grid), names or _cols("q", m),
                 index=grid.tolist(), index_name="t")
    k = model.factor_model.rank
    write_matrix(out / "factor_curves.csv", factor_curves(model, grid), _cols("factor", k),
                 index=grid.tolist(), index_name="t")
    doc = model_document(res, len(t), model.factor_model, basis=model.basis.to_dict(),
                         n_basis=n_basis, detrended=bool(args.detrend), **meta)
    if trend is not None:
        doc["trend"] = trend.tolist()
    save_json(out / "model.json", doc)
    print(f"n_basis={n_basis} lambda={lam:.17g} rank={k}")
    return EXIT_OK


def cmd_samcvar(args) -> int:
    dates, values, names = _read(read_labeled, args.data, header=True)
    if args.input == "prices":
        panel = log_returns(values, dates, names)
    else:
        panel = ReturnPanel(values, dates, names)
    intercept = bool(args.intercept)
    X, Y = build_caviar_features(panel, intercept)
    cfg = solver_config(args)
    lam, meta = _penalty(args, X, panel.m, cfg.tau)
    res, fm = fit_samcvar(panel, cfg.tau, lam, cfg, intercept=intercept,
                          drop_threshold=args.drop_threshold)
    _warn_maxiters(res)
    out = _out_dir(args.out_dir)
    firms = list(panel.firm_names)
    fitted_dates = panel.dates[1:]
    write_matrix(out / "var.csv", X @ res.gamma_hat, firms, index=fitted_dates, index_name="date")
    forecast = var_forecast(res, panel.returns[-1], intercept)
    write_csv(out / "forecast.csv", ["firm", "quantile"], zip(firms, forecast.tolist()))
    k = fm.rank
    write_matrix(out / "factors.csv", factor_scores(fm, X, k), _cols("factor", k),
                 index=fitted_dates, index_name="date")
    table = contribution_table(fm, panel.m, intercept)
    write_csv(out / "contributions.csv", ["factor", "firm", "abs_return", "negative_part"],
              ((i + 1, firms[j], table[i, j, 0], table[i, j, 1])
               for i in range(k) for j in range(panel.m)))
    write_matrix(out / "sensitivity.csv", fm.loadings[:, :k], _cols("factor", k),
                 index=firms, index_name="firm")
    doc = model_document(res, X.shape[0], fm, intercept=intercept, firms=firms,
                         input=args.input, **meta)
    save_json(out / "model.json", doc)
    print(f"lambda={lam:.17g} rank={k}")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit, "tune": cmd_tune, "simulate": cmd_simulate,
    "factorize": cmd_factorize, "curves": cmd_curves, "samcvar": cmd_samcvar,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FastecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        # argparse usage errors exit with 2 already; --help and --version with 0
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (NonConvergence, NonFinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FastecError, InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
