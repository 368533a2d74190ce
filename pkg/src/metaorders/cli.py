"""Command-line entry points.

Subcommands mirror the pipeline stages so each can be run standalone on
files; ``run`` executes the whole study from a JSON config.  Exit codes:
0 success, 1 partial unit failures, 2 config/schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analytics, lmf
from .assignment import assign_trades, build_profile
from .corpus import make_corpus
from .engine import build_metaorders, write_child_dump, write_metaorder_table
from .errors import ParameterError, SchemaError
from .fitting import decay_kernel_model, power_model
from .market_data import (
    compute_daily_stats,
    group_by_day,
    read_trades_file,
    rolling_stats,
    serialize_trades,
    write_daily_stats,
)
from .pipeline import emit_plot_data, load_config, run_pipeline
from .simulator import SimConfig, simulate, true_run_check


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default="-", help="output file ('-' for stdout)")


def _emit(args, content: str) -> None:
    if args.out == "-":
        sys.stdout.write(content)
    else:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(content)


def _load_days(path: str):
    result = read_trades_file(path)
    return result, group_by_day(result.events)


def cmd_ingest(args) -> int:
    result = read_trades_file(args.input)
    _emit(args, serialize_trades(result.events))
    report = {
        "rows": result.n_rows,
        "accepted": len(result.events),
        "rejected": result.n_rejected,
        "reasons": dict(sorted(result.rejections.items())),
    }
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    _result, by_day = _load_days(args.input)
    rows = []
    by_ticker: dict[str, list] = {}
    for (ticker, day), trades in sorted(by_day.items()):
        by_ticker.setdefault(ticker, []).append(compute_daily_stats(trades))
    for ticker in sorted(by_ticker):
        rows.extend(rolling_stats(by_ticker[ticker]))
    _emit(args, write_daily_stats(rows))
    return 0


def _profile_for(args, n_trades: int, ticker: str, day):
    f_max = args.f_max if args.f_max is not None else float(n_trades)
    return build_profile(
        args.n_traders,
        kind=args.participation,
        delta=args.delta,
        f_min=args.f_min,
        f_max=f_max,
        seed=args.seed,
        labels=(ticker, day),
    )


def cmd_assign(args) -> int:
    _result, by_day = _load_days(args.input)
    lines = ["seq_no,trader_id"]
    for (ticker, day), trades in sorted(by_day.items()):
        profile = _profile_for(args, len(trades), ticker, day)
        assignment = assign_trades(trades, profile, seed=args.seed, labels=(ticker, day))
        lines.extend(f"{t.seq_no},{tid}" for t, tid in zip(trades, assignment.trader_ids))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_metaorders(args) -> int:
    _result, by_day = _load_days(args.input)
    metas = []
    for (ticker, day), trades in sorted(by_day.items()):
        daily_list = rolling_stats([compute_daily_stats(trades)])
        profile = _profile_for(args, len(trades), ticker, day)
        assignment = assign_trades(trades, profile, seed=args.seed, labels=(ticker, day))
        metas.extend(build_metaorders(trades, assignment, daily_list[0]).metaorders)
    _emit(args, write_metaorder_table(metas))
    if args.children:
        Path(args.children).write_text(write_child_dump(metas))
    return 0


def _reconstruct_metaorders(args):
    _result, by_day = _load_days(args.input)
    per_day_metas = {}
    for (ticker, day), trades in sorted(by_day.items()):
        daily_list = rolling_stats([compute_daily_stats(trades)])
        profile = _profile_for(args, len(trades), ticker, day)
        assignment = assign_trades(trades, profile, seed=args.seed, labels=(ticker, day))
        per_day_metas[(ticker, day)] = (
            trades,
            assignment,
            build_metaorders(trades, assignment, daily_list[0]).metaorders,
        )
    return per_day_metas


def cmd_analyze(args) -> int:
    per_day = _reconstruct_metaorders(args)
    pooled = [m for (_t, _a, metas) in per_day.values() for m in metas]
    if args.what == "sql":
        sql = analytics.sql_curve(pooled, n_bins=args.bins)
        _emit(args, emit_plot_data("sql", sql=sql))
    elif args.what == "duration":
        hist, curve = analytics.duration_curve(pooled, n_bins=args.bins)
        _emit(args, emit_plot_data("duration", hist=hist, curve=curve))
    elif args.what == "profile":
        curve, fit = analytics.fit_execution_profile(
            pooled, min_children=args.min_children, phi_bins=args.phi_bins
        )
        _emit(args, emit_plot_data("profile", curve=curve, fit=fit, model=power_model))
        print(json.dumps(fit.as_dict(), sort_keys=True), file=sys.stderr)
    elif args.what == "decay":
        zs, ys = [], []
        for (ticker, day), (trades, _a, metas) in sorted(per_day.items()):
            z, y = analytics.collect_decay_points(
                metas, trades, min_children=args.min_children, z_max=args.z_max
            )
            zs.append(z)
            ys.append(y)
        curve, fit = analytics.fit_decay(
            np.concatenate(zs), np.concatenate(ys), z_bins=args.z_bins, z_max=args.z_max
        )
        _emit(args, emit_plot_data("decay", curve=curve, fit=fit, model=decay_kernel_model))
        print(json.dumps(fit.as_dict(), sort_keys=True), file=sys.stderr)
    return 0


def cmd_lmf(args) -> int:
    if args.what == "acf":
        result = read_trades_file(args.input)
        signs = np.array([t.sign for t in result.events], dtype=np.int64)
        tau_max = args.tau_max or lmf.default_tau_range(signs.size)[1]
        estimate = lmf.acf(signs, tau_max=tau_max, centered=args.acf_centered)
        lines = ["tau,acf"] + [
            f"{int(t)},{v!r}" for t, v in zip(estimate.lags, estimate.values)
        ]
        _emit(args, "\n".join(lines) + "\n")
        fit = lmf.fit_gamma(estimate, tau_min=args.tau_min, tau_max=args.tau_max)
        print(
            json.dumps(
                {
                    "gamma": fit.gamma,
                    "gamma_ci": fit.half_width,
                    "tau_range": [fit.tau_min, fit.tau_max],
                    "estimator_variant": "centered" if args.acf_centered else "raw",
                },
                sort_keys=True,
            ),
            file=sys.stderr,
        )
    elif args.what == "alpha":
        per_day = _reconstruct_metaorders(args)
        trader_signs: dict[int, list[int]] = {}
        for (ticker, day), (trades, assignment, _m) in sorted(per_day.items()):
            for t, tid in zip(trades, assignment.trader_ids):
                trader_signs.setdefault(int(tid), []).append(t.sign)
        sequences = {k: np.asarray(v) for k, v in trader_signs.items()}
        labels = lmf.classify_traders(
            sequences, level=args.st_test_level, min_orders=args.min_orders
        )
        lengths = np.concatenate(
            [lmf.run_lengths(sequences[k]) for k, lab in sorted(labels.items()) if lab == "ST"]
            or [np.array([], dtype=np.int64)]
        )
        fit = lmf.fit_alpha(lengths)
        _emit(
            args,
            json.dumps(
                {
                    "alpha_pdf": fit.alpha_pdf,
                    "alpha_lmf": fit.alpha_lmf,
                    "x_min": fit.x_min,
                    "ks": fit.ks_distance,
                    "n_tail": fit.n_tail,
                    "std_err": fit.std_err,
                    "n_st": sum(1 for v in labels.values() if v == "ST"),
                },
                sort_keys=True,
            )
            + "\n",
        )
    elif args.what == "compare":
        alpha_fits, gamma_fits = {}, {}
        for path in args.reports:
            data = json.loads(Path(path).read_text())
            key = data.get("ticker", Path(path).stem)
            if "alpha_pdf" in data:
                alpha_fits[key] = lmf.PowerLawFit(
                    alpha_pdf=data["alpha_pdf"],
                    alpha_lmf=data["alpha_lmf"],
                    x_min=data.get("x_min", 2),
                    ks_distance=data.get("ks", float("nan")),
                    n_tail=data.get("n_tail", 0),
                    std_err=data.get("std_err", float("nan")),
                )
            if "gamma" in data:
                gamma_fits[key] = lmf.GammaFit(
                    gamma=data["gamma"],
                    half_width=data.get("gamma_ci", float("nan")),
                    tau_min=data.get("tau_range", [0, 0])[0],
                    tau_max=data.get("tau_range", [0, 0])[1],
                    r_squared=data.get("r_squared", float("nan")),
                    n_lags=data.get("n_lags", 0),
                )
        comparison = lmf.lmf_compare(alpha_fits, gamma_fits)
        _emit(args, emit_plot_data("alpha_gamma", comparison=comparison))
    return 0


def cmd_simulate(args) -> int:
    config = SimConfig(
        alpha=args.alpha,
        n_traders=args.n_traders,
        n_orders=args.n_orders,
        l_min=args.l_min,
        l_cap=args.l_cap,
        participation=args.participation,
        delta=args.delta,
        seed=args.seed,
    )
    output = simulate(config)
    report = true_run_check(output)
    lines = ["index,sign,trader_id"] + [
        f"{i},{int(s)},{int(t)}"
        for i, (s, t) in enumerate(zip(output.signs, output.trader_ids))
    ]
    _emit(args, "\n".join(lines) + "\n")
    if args.metaorders:
        Path(args.metaorders).write_text(
            "trader,start,length,sign,truncated\n"
            + "".join(
                f"{m.trader},{m.start},{m.length},{m.sign},{int(m.truncated)}\n"
                for m in output.true_metaorders
            )
        )
    print(config.to_json(), file=sys.stderr)
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_pipeline(cfg, out_dir=args.out if args.out != "-" else None, workers=args.workers)
    print(json.dumps({"run_dir": manifest["run_dir"], "failures": len(manifest["failures"])}))
    return 1 if manifest["failures"] else 0


def cmd_make_corpus(args) -> int:
    paths = make_corpus(
        args.out_dir,
        tickers=tuple(args.tickers),
        n_days=args.n_days,
        trades_per_day=args.trades_per_day,
        seed=args.seed,
    )
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaorders",
        description="Synthetic metaorder reconstruction and LMF analytics",
    )
    parser.add_argument("--log-level", default="warning", help="unused placeholder for scripts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and re-serialise a trade file")
    p.add_argument("--input", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("stats", help="daily stats with 20-day rolling averages")
    p.add_argument("--input", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_stats)

    def add_scenario_flags(p):
        p.add_argument("--n-traders", type=int, default=4, dest="n_traders")
        p.add_argument(
            "--participation", choices=["homogeneous", "power_law"], default="homogeneous"
        )
        p.add_argument("--delta", type=float, default=2.0)
        p.add_argument("--f-min", type=float, default=1.0, dest="f_min")
        p.add_argument("--f-max", type=float, default=None, dest="f_max")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("assign", help="draw the trader assignment for each trade")
    p.add_argument("--input", required=True)
    add_scenario_flags(p)
    _add_common(p)
    p.set_defaults(fn=cmd_assign)

    p = sub.add_parser("metaorders", help="build the synthetic metaorder table")
    p.add_argument("--input", required=True)
    add_scenario_flags(p)
    p.add_argument("--children", default=None, help="optional child-level dump path")
    _add_common(p)
    p.set_defaults(fn=cmd_metaorders)

    p = sub.add_parser("analyze", help="stylised-fact curves and fits")
    p.add_argument("what", choices=["sql", "duration", "profile", "decay"])
    p.add_argument("--input", required=True)
    add_scenario_flags(p)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--min-children", type=int, default=10, dest="min_children")
    p.add_argument("--phi-bins", type=int, default=25, dest="phi_bins")
    p.add_argument("--z-bins", type=int, default=30, dest="z_bins")
    p.add_argument("--z-max", type=float, default=10.0, dest="z_max")
    _add_common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("lmf", help="sign-memory inference")
    p.add_argument("what", choices=["acf", "alpha", "compare"])
    p.add_argument("--input", default=None)
    p.add_argument("--reports", nargs="*", default=[], help="per-stock JSON reports (compare)")
    add_scenario_flags(p)
    p.add_argument("--tau-min", type=int, default=None, dest="tau_min")
    p.add_argument("--tau-max", type=int, default=None, dest="tau_max")
    p.add_argument("--acf-centered", action="store_true", dest="acf_centered")
    p.add_argument("--st-test-level", type=float, default=0.01, dest="st_test_level")
    p.add_argument("--min-orders", type=int, default=30, dest="min_orders")
    _add_common(p)
    p.set_defaults(fn=cmd_lmf)

    p = sub.add_parser("simulate", help="LMF order-splitting flow with ground truth")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n-traders", type=int, default=1, dest="n_traders")
    p.add_argument("--n-orders", type=int, default=100_000, dest="n_orders")
    p.add_argument("--l-min", type=int, default=2, dest="l_min")
    p.add_argument("--l-cap", type=int, default=100_000, dest="l_cap")
    p.add_argument(
        "--participation", choices=["homogeneous", "power_law"], default="homogeneous"
    )
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metaorders", default=None, help="optional true-metaorder dump path")
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("run", help="full pipeline from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override scenario seeds")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("make-corpus", help="write the bundled synthetic demo corpus")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--tickers", nargs="*", default=["AAA", "BBB"])
    p.add_argument("--n-days", type=int, default=3, dest="n_days")
    p.add_argument("--trades-per-day", type=int, default=400, dest="trades_per_day")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_make_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaError, ParameterError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
