"""Command-line interface.

Exit codes: 0 success, 1 partial failure (``batch`` skipped rows), 2 usage
or validation error. Diagnostics go to stderr; stdout carries only the
requested report or CSV.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .anova import read_matrix_csv, rm_anova, summary_from_anova
from .errors import RMBayesError
from .evidence import (
    EvidenceReport,
    Method,
    PriorSpec,
    SummaryStats,
    bic_bf_rm,
    evidence_report,
    log_pearson_prior_density,
    sellke_bound,
)
from .simulation import (
    load_config,
    posterior_distribution_export,
    run_grid,
    write_accuracy_csv,
    write_consistency_csv,
)
from .special import f_inverse_upper_tail, f_upper_tail

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def num(v):
    """JSON-safe number with 12 significant digits; non-finite becomes null."""
    if v is None:
        return None
    if isinstance(v, (bool, int, np.integer)):
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(f"{v:.12g}")


def fmt12(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def report_dict(stats: SummaryStats, report: EvidenceReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "method": report.method.value,
        "alpha": num(report.alpha_used),
        "f": num(stats.f_stat),
        "x": int(stats.x),
        "y": int(stats.y),
        "bf10": num(report.bf10),
        "bf01": num(report.bf01),
        "log_bf10": num(report.log_bf10),
        "log10_bf10": num(report.log10_bf10),
        "favored": report.favored.value,
        "directed_bf": num(report.directed_bf),
        "prior_odds_h0": num(report.prior_odds_h0),
        "posterior_h0": num(report.posterior_h0),
        "posterior_h1": num(report.posterior_h1),
        "p_value": num(report.p_value),
        "sellke_bound_bf10": num(report.sellke_bound_bf10),
    }


def _emit(doc: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump(doc, out, indent=2, allow_nan=False)
        out.write("\n")
        return
    width = max(len(k) for k in _flatten(doc))
    for key, value in _flatten(doc).items():
        shown = "" if value is None else value
        out.write(f"{key:<{width}}  {shown}\n")


def _flatten(doc: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{prefix}{key}."))
        else:
            flat[f"{prefix}{key}"] = value
    return flat


@contextlib.contextmanager
def _open_out(path: str):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _whole(value: float, name: str) -> int:
    if not float(value).is_integer():
        raise UsageError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _resolve_stats(args) -> SummaryStats:
    """SummaryStats from --x/--y or the repeated-measures --n/--k flags.

    Only the dfs are kept so both spellings of one design give identical output.
    """
    if args.f is None:
        raise UsageError("--f is required")
    if not args.f >= 0:
        raise UsageError(f"--f must satisfy f >= 0, got {args.f}")
    have_xy = args.x is not None or args.y is not None
    have_nk = args.n is not None or args.k is not None
    if have_xy:
        if args.x is None or args.y is None:
            raise UsageError("--x and --y must be given together")
        stats = SummaryStats(args.f, args.x, args.y)
        if have_nk:
            if args.n is None or args.k is None:
                raise UsageError("--n and --k must be given together")
            SummaryStats(args.f, args.x, args.y, args.n, args.k)
        return stats
    if have_nk:
        if args.n is None or args.k is None:
            raise UsageError("--n and --k must be given together")
        full = SummaryStats.from_design(args.f, args.n, args.k)
        return SummaryStats(full.f_stat, full.x, full.y)
    raise UsageError("give the degrees of freedom with --x/--y or the design with --n/--k")


def cmd_bf(args) -> int:
    stats = _resolve_stats(args)
    report = evidence_report(
        stats, args.alpha, Method(args.method), args.prior_odds, permissive=args.permissive_alpha
    )
    _emit(report_dict(stats, report), args.format, sys.stdout)
    return EXIT_OK


def cmd_sellke(args) -> int:
    if args.p is not None:
        if any(v is not None for v in (args.f, args.x, args.y)):
            raise UsageError("give either --p or --f/--x/--y, not both")
        p = args.p
    else:
        if args.f is None or args.x is None or args.y is None:
            raise UsageError("give --p, or all of --f, --x and --y")
        if not args.f >= 0:
            raise UsageError(f"--f must satisfy f >= 0, got {args.f}")
        p = f_upper_tail(args.f, args.x, args.y)
    if not 0 < p < 1 / math.e:
        raise UsageError(f"the Sellke bound is only defined for 0 < p < 1/e (~0.3679); p = {p:.6g}")
    doc = {"schema_version": SCHEMA_VERSION, "p": num(p), "sellke_bound_bf10": num(sellke_bound(p))}
    _emit(doc, args.format, sys.stdout)
    return EXIT_OK


def cmd_sellke_curve(args) -> int:
    if args.points < 2:
        raise UsageError(f"--points must be >= 2, got {args.points}")
    if not 0 < args.p_min < args.p_max < 1 / math.e:
        raise UsageError("need 0 < --p-min < --p-max < 1/e")
    if args.n < 2 or args.k < 2:
        raise UsageError("need --n >= 2 and --k >= 2")
    x, y = args.k - 1, (args.n - 1) * (args.k - 1)
    with _open_out(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["p", "sellke_bf10", "bic_bf10"])
        for p in np.geomspace(args.p_min, args.p_max, args.points):
            p = float(p)
            f = f_inverse_upper_tail(p, x, y)
            writer.writerow([fmt12(p), fmt12(sellke_bound(p)), fmt12(bic_bf_rm(f, args.n, args.k).bf10)])
    return EXIT_OK


def cmd_prior(args) -> int:
    if args.points < 2:
        raise UsageError(f"--points must be >= 2, got {args.points}")
    n_total = args.n_total if args.n_total is not None else args.n * args.k
    if not -1 < args.alpha:
        raise UsageError(f"--alpha must exceed -1, got {args.alpha}")
    prior = PriorSpec.for_design(args.alpha, args.n, n_total, args.k)
    if args.spacing == "log":
        if not 0 < args.tau_min < args.tau_max:
            raise UsageError("log spacing needs 0 < --tau-min < --tau-max")
        grid = np.geomspace(args.tau_min, args.tau_max, args.points)
    else:
        if not 0 <= args.tau_min < args.tau_max:
            raise UsageError("need 0 <= --tau-min < --tau-max")
        grid = np.linspace(args.tau_min, args.tau_max, args.points)
    with _open_out(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["tau", "density"])
        for tau in grid:
            lp = log_pearson_prior_density(float(tau), prior)
            writer.writerow([fmt12(tau), fmt12(math.exp(lp) if lp < 709 else math.inf)])
    return EXIT_OK


def cmd_anova(args) -> int:
    try:
        with open(args.input, encoding="utf-8", newline="") as fh:
            conditions, data = read_matrix_csv(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    table = rm_anova(data)
    n, k = data.shape
    stats = summary_from_anova(table, n, k)
    report = evidence_report(stats, args.alpha, Method.PEARSON_RM, args.prior_odds)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n_subjects": n,
        "k_conditions": k,
        "conditions": conditions,
        "anova": {key: num(v) for key, v in table.to_dict().items()},
        "evidence": report_dict(stats, report),
    }
    if args.format == "text":
        doc["conditions"] = ",".join(conditions)
    _emit(doc, args.format, sys.stdout)
    return EXIT_OK


BATCH_COLUMNS = ["study_id", "design", "f", "x", "y", "n", "k"]
BATCH_OUTPUT = ["study_id", "alpha", "bf10", "bf01", "favored", "posterior_h1", "p_value", "sellke_bound"]


def _batch_stats(row: dict) -> tuple[SummaryStats, Method]:
    def field(name, kind=float, required=False):
        raw = (row.get(name) or "").strip()
        if not raw:
            if required:
                raise ValueError(f"{name} is required")
            return None
        try:
            value = float(raw)
        except ValueError:
            raise ValueError(f"{name} is not a number: {raw!r}") from None
        if kind is int:
            if not value.is_integer():
                raise ValueError(f"{name} must be an integer: {raw!r}")
            return int(value)
        return value

    design = (row.get("design") or "").strip().lower()
    f = field("f", required=True)
    x, y, n, k = field("x", int), field("y", int), field("n", int), field("k", int)
    if design == "rm":
        if x is None or y is None:
            if n is None or k is None:
                raise ValueError("rm rows need x and y, or n and k")
            return SummaryStats.from_design(f, n, k), Method.PEARSON_RM
        return SummaryStats(f, x, y, n, k), Method.PEARSON_RM
    if design == "between":
        # n is the total sample size for between-subjects rows
        if n is not None and k is not None:
            if k < 2 or n <= k:
                raise ValueError(f"between rows need k >= 2 and n > k, got n={n}, k={k}")
            if (x is not None and x != k - 1) or (y is not None and y != n - k):
                raise ValueError(f"x, y inconsistent with k={k}, N={n}")
            return SummaryStats(f, k - 1, n - k), Method.PEARSON_BETWEEN
        if x is None or y is None:
            raise ValueError("between rows need x and y, or n (total) and k")
        return SummaryStats(f, x, y), Method.PEARSON_BETWEEN
    raise ValueError(f"design must be 'rm' or 'between', got {design!r}")


def cmd_batch(args) -> int:
    alphas = args.alpha if args.alpha else [-0.5, 0.0]
    try:
        fh = open(args.input, encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in BATCH_COLUMNS if c not in header]
        if missing:
            raise UsageError(f"batch header must be {','.join(BATCH_COLUMNS)}; missing {missing}")
        reader.fieldnames = header
        rows = list(reader)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BATCH_OUTPUT)
    skipped = 0
    for lineno, row in enumerate(rows, start=2):
        study = (row.get("study_id") or "").strip()
        try:
            stats, method = _batch_stats(row)
            reports = [evidence_report(stats, a, method) for a in alphas]
        except (ValueError, RMBayesError) as exc:
            skipped += 1
            print(f"batch: line {lineno} ({study or 'no study_id'}): skipped: {exc}", file=sys.stderr)
            continue
        for a, rep in zip(alphas, reports):
            writer.writerow([
                study,
                fmt12(a),
                fmt12(rep.bf10),
                fmt12(rep.bf01),
                rep.favored.value,
                fmt12(rep.posterior_h1),
                fmt12(rep.p_value),
                fmt12(rep.sellke_bound_bf10),
            ])
    with _open_out(args.out) as out:
        out.write(buffer.getvalue())
    if skipped:
        print(f"batch: {skipped} row(s) skipped", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read {args.config}: {exc.strerror}") from None
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    result = run_grid(config, threads=args.threads)
    os.makedirs(args.out_dir, exist_ok=True)
    paths = {
        "accuracy": os.path.join(args.out_dir, "accuracy.csv"),
        "consistency": os.path.join(args.out_dir, "consistency.csv"),
        "posterior": os.path.join(args.out_dir, "posterior.csv"),
    }
    with open(paths["accuracy"], "w", encoding="utf-8", newline="") as fh:
        write_accuracy_csv(result.accuracy, fh)
    with open(paths["consistency"], "w", encoding="utf-8", newline="") as fh:
        write_consistency_csv(result.consistency, fh)
    with open(paths["posterior"], "w", encoding="utf-8", newline="") as fh:
        posterior_distribution_export(result.trials, fh)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "cells": len(config.spec_grid),
        "replicates": config.replicates,
        "seed": config.seed,
        "methods": result.methods,
        "trials": len(result.trials),
        "excluded_degenerate": sum(result.excluded.values()),
        "outputs": paths,
    }
    if args.format == "text":
        doc["methods"] = ",".join(result.methods)
    _emit(doc, args.format, sys.stdout)
    return EXIT_OK


def _add_format(p):
    p.add_argument("--format", choices=("json", "text"), default="json", help="output format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rmbayes", description="Bayes factors for ANOVA designs from summary statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bf", help="Bayes factor and evidence report from F and its dfs")
    p.add_argument("--f", type=float, help="observed F statistic")
    p.add_argument("--x", type=int, help="treatment degrees of freedom")
    p.add_argument("--y", type=int, help="residual degrees of freedom")
    p.add_argument("--n", type=int, help="subjects (repeated-measures design)")
    p.add_argument("--k", type=int, help="conditions (repeated-measures design)")
    p.add_argument("--alpha", type=float, default=-0.5, help="Pearson prior shape in [-1/2, 0] (default -0.5)")
    p.add_argument(
        "--method", choices=[m.value for m in (Method.PEARSON_RM, Method.PEARSON_BETWEEN, Method.BIC_RM)],
        default=Method.PEARSON_RM.value,
    )
    p.add_argument("--prior-odds", type=float, default=1.0, help="prior odds p(H0)/p(H1) (default 1)")
    p.add_argument("--permissive-alpha", action="store_true", help="allow any alpha > -1")
    _add_format(p)
    p.set_defaults(func=cmd_bf)

    p = sub.add_parser("sellke", help="Sellke upper bound on BF10 from a p-value")
    p.add_argument("--p", type=float)
    p.add_argument("--f", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--y", type=float)
    _add_format(p)
    p.set_defaults(func=cmd_sellke)

    p = sub.add_parser("sellke-curve", help="CSV of Sellke bound vs BIC Bayes factor over p")
    p.add_argument("--n", type=int, default=18)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p-min", type=float, default=1e-6)
    p.add_argument("--p-max", type=float, default=0.02)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.set_defaults(func=cmd_sellke_curve)

    p = sub.add_parser("prior", help="CSV of the Pearson Type VI prior density on tau")
    p.add_argument("--n", type=int, default=18, help="subjects; sets the prior scale")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n-total", type=float, help="observation count for the shape (default n*k)")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--tau-min", type=float, default=0.0)
    p.add_argument("--tau-max", type=float, default=3.0)
    p.add_argument("--points", type=int, default=301)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.set_defaults(func=cmd_prior)

    p = sub.add_parser("anova", help="repeated-measures ANOVA and Bayes factor from raw data CSV")
    p.add_argument("--input", required=True, help="CSV with header subject,c1,...,ck")
    p.add_argument("--alpha", type=float, default=-0.5)
    p.add_argument("--prior-odds", type=float, default=1.0)
    _add_format(p)
    p.set_defaults(func=cmd_anova)

    p = sub.add_parser("batch", help="Bayes factors for a CSV of published results")
    p.add_argument("--input", required=True, help="CSV with header " + ",".join(BATCH_COLUMNS))
    p.add_argument("--alpha", type=float, action="append", help="repeatable (default -0.5 and 0)")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("simulate", help="run the mixed-model benchmark grid")
    p.add_argument("--config", required=True, help="INI file with a [simulation] section")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    _add_format(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (UsageError, RMBayesError, ValueError) as exc:
        print(f"rmbayes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rmbayes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
