"""Command-line driver: ``kmucov {analytic,simulate,compare,selftest}``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .coverage import CoverageQuery, Method, coverage, resolve_method
from .errors import ConvergenceError, DomainError, MethodError, TruncationError
from .mcsim import SimConfig, estimate_coverage

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

CSV_HEADER = ("T_dB", "pc_analytic", "pc_mc", "ci_low", "ci_high", "trials", "method", "residual", "sq_err")
NUMERIC_ERRORS = (DomainError, MethodError, ConvergenceError, TruncationError, ArithmeticError)


class NumericFailure(Exception):
    def __init__(self, t_db: float | None, cause: Exception):
        self.t_db = t_db
        where = "simulation" if t_db is None else f"T_dB={_fmt(t_db)}"
        super().__init__(f"numeric failure at {where}: {type(cause).__name__}: {cause}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return "%.12g" % v


@contextmanager
def _csv_sink(path: Path | None):
    if path is None:
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _analytic_row(cfg: ExperimentConfig, t_db: float, T: float) -> dict:
    query = CoverageQuery(T, cfg.method, cfg.eps_weights, cfg.max_series_order)
    try:
        res = coverage(cfg.model, query)
        row = {"pc_analytic": res.value, "method": res.method.name, "residual": res.residual_estimate}
        if cfg.squared_error:
            other = Method.RICIAN_APPROX if res.method is Method.EXACT_INTEGER_MU else Method.EXACT_INTEGER_MU
            alt = coverage(cfg.model, replace(query, method=other))
            row["sq_err"] = (res.value - alt.value) ** 2
    except NUMERIC_ERRORS as exc:
        raise NumericFailure(t_db, exc) from exc
    return row


def _sidecar(csv_path: Path | None, explicit: Path | None, suffix: str) -> Path | None:
    if explicit is not None:
        return explicit
    if csv_path is None:
        return None
    return csv_path.with_name(csv_path.stem + suffix)


def run_sweep(cfg: ExperimentConfig, analytic: bool, simulate: bool, plot: bool = False) -> list[dict]:
    """Write the CSV for one sweep; rows are flushed as they complete."""
    thresholds = cfg.thresholds
    mc = None
    if simulate:
        try:
            mc = estimate_coverage(cfg.model, thresholds, cfg.sim)
        except NUMERIC_ERRORS as exc:
            raise NumericFailure(None, exc) from exc

    rows: list[dict] = []
    with _csv_sink(cfg.csv_path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, (t_db, T) in enumerate(zip(cfg.thresholds_db, thresholds)):
            row = {"T_dB": t_db}
            if mc is not None:
                est = mc[i]
                row.update(pc_mc=est.p_hat, ci_low=est.ci_low, ci_high=est.ci_high, trials=est.trials)
            if analytic:
                row.update(_analytic_row(cfg, t_db, T))
            writer.writerow([_fmt(row.get(k)) for k in CSV_HEADER])
            fh.flush()
            rows.append(row)

    if plot:
        from .plotting import plot_coverage, plot_squared_error

        t_db = [r["T_dB"] for r in rows]
        svg = _sidecar(cfg.csv_path, cfg.svg_path, ".svg")
        if svg is not None:
            plot_coverage(
                t_db,
                [r.get("pc_analytic") for r in rows],
                [r.get("pc_mc") for r in rows] if simulate else None,
                [(r["ci_low"], r["ci_high"]) for r in rows] if simulate else None,
                svg,
                title=_title(cfg),
            )
        err_svg = _sidecar(cfg.csv_path, cfg.error_svg_path, "_sq_err.svg")
        if cfg.squared_error and analytic and err_svg is not None:
            plot_squared_error(t_db, [r.get("sq_err") for r in rows], err_svg, title=_title(cfg))
    return rows


def _title(cfg: ExperimentConfig) -> str:
    d, i = cfg.model.desired, cfg.model.interferer
    return (
        f"alpha={cfg.model.alpha:g}  desired (k,mu,m)=({d.kappa:g},{d.mu:g},{d.m:g})"
        f"  interferer ({i.kappa:g},{i.mu:g},{i.m:g})"
    )


def _check_outputs(cfg: ExperimentConfig) -> None:
    for p in (cfg.csv_path, cfg.svg_path, cfg.error_svg_path):
        if p is not None and not p.parent.is_dir():
            raise ConfigError(f"output directory does not exist: {p.parent}", cfg.source)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmucov",
        description="Coverage probability of Poisson cellular networks under kappa-mu shadowed fading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analytic", "analytic coverage over the threshold sweep"),
        ("simulate", "Monte Carlo coverage over the threshold sweep"),
        ("compare", "analytic and Monte Carlo side by side, with SVG figures"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="PATH", help="CSV output (default: [output] csv, else stdout)")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--trials", type=int, metavar="N")
        p.add_argument("--method", choices=("exact", "approx", "auto"))
        p.add_argument("--workers", type=int, metavar="N", help="simulation worker processes")
    st = sub.add_parser("selftest", help="fast invariant checks")
    st.add_argument("--corrupt", action="append", default=[], metavar="CHECK", help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "selftest":
        from .selftest import run_selftest

        try:
            return EXIT_OK if run_selftest(args.corrupt) else EXIT_SELFTEST
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_CONFIG

    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(
            cfg, seed=args.seed, trials=args.trials, method=args.method, out=args.out, workers=args.workers
        )
        simulate = args.command in ("simulate", "compare")
        if simulate and cfg.sim is None:
            if args.command == "compare":
                raise ConfigError("compare needs a [sim] section or --trials/--seed", cfg.source)
            cfg = replace(cfg, sim=SimConfig())
        _check_outputs(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        rows = run_sweep(
            cfg,
            analytic=args.command in ("analytic", "compare"),
            simulate=simulate,
            plot=args.command == "compare" or cfg.svg_path is not None,
        )
    except NumericFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    if cfg.csv_path is not None:
        method = resolve_method(cfg.model, cfg.method).name if args.command != "simulate" else "MC"
        print(f"wrote {len(rows)} rows ({method}) to {cfg.csv_path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
