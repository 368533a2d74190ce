"""Full-study orchestration from a single JSON configuration.

Stages run in dependency order per (ticker, day, scenario) unit: ingest,
daily stats, trader assignment, metaorder construction, stylised-fact
analytics, LMF inference, and optional simulator scenarios.  Every
artifact lands under a fresh run directory with a manifest recording
content hashes and the exact settings, so identical configs reproduce
identical analytical outputs.
"""

from __future__ import annotations

import csv
import glob as globmod
import hashlib
import io
import json
import math
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np

from . import analytics, engine, lmf
from .assignment import assign_trades, build_profile
from .binning import BinnedCurve
from .errors import InsufficientDataError, ParameterError
from .fitting import decay_kernel_model, power_model
from .market_data import (
    DailyStats,
    TradeEvent,
    group_by_day,
    read_trades_file,
    rolling_stats,
    compute_daily_stats,
    write_daily_stats,
)
from .simulator import SimConfig, simulate, true_run_check

__all__ = ["Scenario", "PipelineConfig", "run_pipeline", "load_config", "emit_plot_data"]


@dataclass(frozen=True)
class Scenario:
    label: str
    n_traders: int
    participation: str = "homogeneous"
    delta: float = 2.0
    f_min: float = 1.0
    f_max: float | None = None  # defaults to the day's trade count
    seed: int = 0


@dataclass
class PipelineConfig:
    data_glob: str
    scenarios: list[Scenario]
    tickers: list[str] | None = None
    date_start: Date | None = None
    date_end: Date | None = None
    analytics: dict = field(default_factory=dict)
    simulator: list[dict] = field(default_factory=list)
    output_dir: str = "out"
    dump_assignments: bool = False

    def validate(self) -> None:
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise ParameterError("scenario labels must be unique")
        if not globmod.glob(self.data_glob):
            raise ParameterError(f"no input files match {self.data_glob!r}")


ANALYTICS_DEFAULTS = {
    "sql": True,
    "duration": True,
    "profile": True,
    "decay": True,
    "lmf": True,
    "bins": 40,
    "min_children": 10,
    "phi_bins": 25,
    "z_bins": 30,
    "z_max": 10.0,
    "tau_min": None,
    "tau_max": None,
    "acf_centered": False,
    "st_test_level": 0.01,
    "min_orders": 30,
}


def load_config(source) -> PipelineConfig:
    """Build a PipelineConfig from a JSON file path or a parsed dict."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            raw = json.load(fh)
    else:
        raw = dict(source)
    scenarios = [Scenario(**s) for s in raw.get("scenarios", [])]
    date_range = raw.get("date_range")
    cfg = PipelineConfig(
        data_glob=raw["data_glob"],
        scenarios=scenarios,
        tickers=raw.get("tickers"),
        date_start=Date.fromisoformat(date_range[0]) if date_range else None,
        date_end=Date.fromisoformat(date_range[1]) if date_range else None,
        analytics={**ANALYTICS_DEFAULTS, **raw.get("analytics", {})},
        simulator=raw.get("simulator", []),
        output_dir=raw.get("output_dir", "out"),
        dump_assignments=bool(raw.get("dump_assignments", False)),
    )
    cfg.validate()
    return cfg


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _RunWriter:
    """Collects artifacts and their hashes under one run directory."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.artifacts: list[dict] = []

    def write(self, rel_path: str, content: str, stage: str, unit: str = "") -> None:
        path = self.root / rel_path
        path.parent.mkdir(parents=True, exist_ok=True)
        data = content.encode("utf-8")
        if path.exists():
            raise RuntimeError(f"artifact written twice in one run: {rel_path}")
        path.write_bytes(data)
        self.artifacts.append(
            {"path": rel_path, "sha256": _sha256(data), "stage": stage, "unit": unit}
        )


def _next_run_dir(base: Path) -> Path:
    base.mkdir(parents=True, exist_ok=True)
    n = 1
    while (base / f"run-{n:03d}").exists():
        n += 1
    path = base / f"run-{n:03d}"
    path.mkdir()
    return path


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _curve_rows(curve: BinnedCurve, extra: dict[str, np.ndarray] | None = None):
    extra = extra or {}
    rows = []
    for i in range(curve.bin_centers.size):
        row = {
            "bin_center": repr(float(curve.bin_centers[i])),
            "mean": "" if not curve.count[i] else repr(float(curve.mean_y[i])),
            "count": int(curve.count[i]),
            "stderr": ""
            if curve.count[i] < 2 or not np.isfinite(curve.stderr[i])
            else repr(float(curve.stderr[i])),
        }
        for name, values in extra.items():
            v = values[i]
            row[name] = "" if v is None or (isinstance(v, float) and not math.isfinite(v)) else repr(float(v))
        rows.append(row)
    return rows


def _write_csv(rows: list[dict], columns: list[str]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return out.getvalue()


def emit_plot_data(kind: str, **parts) -> str:
    """Render one plot-ready CSV per figure family.

    kinds: "sql" (curve + theory overlay), "duration" (histogram + curve),
    "profile"/"decay" (curve + fitted samples), "alpha_gamma" (scatter with
    per-bin medians).  Empty bins keep their row with count 0 and blank
    mean fields.
    """
    if kind == "sql":
        sql: analytics.SqlCurve = parts["sql"]
        theory = sql.theory(sql.curve.bin_centers)
        rows = _curve_rows(sql.curve, {"theory": theory})
        for r in rows:
            r["mean_impact"] = r.pop("mean")
        return _write_csv(rows, ["bin_center", "mean_impact", "count", "stderr", "theory"])
    if kind == "duration":
        hist, curve = parts["hist"], parts["curve"]
        rows = _curve_rows(curve)
        for r, c in zip(rows, hist.count):
            r["duration_count"] = int(c)
        return _write_csv(rows, ["bin_center", "duration_count", "mean", "count", "stderr"])
    if kind in ("profile", "decay"):
        curve, fit, model = parts["curve"], parts["fit"], parts["model"]
        fitted = model(curve.bin_centers, fit.estimates)
        rows = _curve_rows(curve, {"fitted": fitted})
        return _write_csv(rows, ["bin_center", "mean", "count", "stderr", "fitted"])
    if kind == "alpha_gamma":
        comparison: lmf.LmfComparison = parts["comparison"]
        rows = [
            {
                "kind": "point",
                "stock": r["stock"],
                "alpha_minus_1": repr(r["alpha_minus_1"]),
                "gamma": repr(r["gamma"]),
                "abs_dev": repr(r["abs_dev"]),
            }
            for r in comparison.rows
        ]
        for center, median in zip(comparison.bin_centers, comparison.bin_median_gamma):
            if math.isfinite(median):
                rows.append(
                    {
                        "kind": "median",
                        "stock": "",
                        "alpha_minus_1": repr(float(center)),
                        "gamma": repr(float(median)),
                        "abs_dev": "",
                    }
                )
        return _write_csv(rows, ["kind", "stock", "alpha_minus_1", "gamma", "abs_dev"])
    raise ParameterError(f"unknown plot kind: {kind!r}")


def _ingest_ticker(path: str, cfg: PipelineConfig):
    result = read_trades_file(path)
    by_day = group_by_day(result.events)
    kept: dict[tuple[str, Date], list[TradeEvent]] = {}
    for (ticker, day), trades in sorted(by_day.items()):
        if cfg.tickers and ticker not in cfg.tickers:
            continue
        if cfg.date_start and day < cfg.date_start:
            continue
        if cfg.date_end and day > cfg.date_end:
            continue
        kept[(ticker, day)] = trades
    return result, kept


def _scenario_day_unit(
    scenario: Scenario,
    ticker: str,
    day: Date,
    trades: list[TradeEvent],
    daily: DailyStats,
):
    f_max = scenario.f_max if scenario.f_max is not None else float(len(trades))
    profile = build_profile(
        scenario.n_traders,
        kind=scenario.participation,
        delta=scenario.delta,
        f_min=scenario.f_min,
        f_max=f_max,
        seed=scenario.seed,
        labels=(ticker, day),
    )
    assignment = assign_trades(trades, profile, seed=scenario.seed, labels=(ticker, day))
    built = engine.build_metaorders(trades, assignment, daily)
    return assignment, built


def run_pipeline(cfg: PipelineConfig, out_dir=None, workers: int = 1) -> dict:
    """Execute every stage and return the manifest (also written to disk).

    Unit failures are recorded and skipped; the manifest's ``failures``
    list is the source of truth for the exit status.
    """
    cfg.validate()
    run_dir = _next_run_dir(Path(out_dir if out_dir is not None else cfg.output_dir))
    writer = _RunWriter(run_dir)
    failures: list[dict] = []
    a = {**ANALYTICS_DEFAULTS, **cfg.analytics}

    # ---- ingest + daily stats, per ticker ----------------------------------
    per_day: dict[tuple[str, Date], list[TradeEvent]] = {}
    stats_by_day: dict[tuple[str, Date], DailyStats] = {}
    for path in sorted(globmod.glob(cfg.data_glob)):
        try:
            parse_result, kept = _ingest_ticker(path, cfg)
        except Exception as exc:  # bad file: report and continue
            failures.append({"stage": "ingest", "unit": path, "error": str(exc)})
            continue
        per_day.update(kept)
        by_ticker: dict[str, list[DailyStats]] = {}
        for (ticker, day), trades in sorted(kept.items()):
            try:
                stats = compute_daily_stats(trades)
            except Exception as exc:
                failures.append(
                    {"stage": "daily_stats", "unit": f"{ticker}/{day}", "error": str(exc)}
                )
                continue
            by_ticker.setdefault(ticker, []).append(stats)
        for ticker, days in sorted(by_ticker.items()):
            rolled = rolling_stats(days)
            for d in rolled:
                stats_by_day[(ticker, d.date)] = d
            writer.write(
                f"ingest/{ticker}_daily_stats.csv",
                write_daily_stats(rolled),
                stage="daily_stats",
                unit=ticker,
            )
        writer.write(
            f"ingest/{Path(path).stem}_rejections.json",
            _json_dumps(
                {
                    "file": Path(path).name,
                    "rows": parse_result.n_rows,
                    "accepted": len(parse_result.events),
                    "rejected": parse_result.n_rejected,
                    "reasons": dict(sorted(parse_result.rejections.items())),
                }
            ),
            stage="ingest",
            unit=path,
        )

    # ---- scenario units ----------------------------------------------------
    scenario_metaorders: dict[str, dict[str, list[engine.Metaorder]]] = {}
    scenario_assignments: dict[tuple[str, str, Date], np.ndarray] = {}
    units = [
        (scenario, ticker, day)
        for scenario in cfg.scenarios
        for (ticker, day) in sorted(per_day)
        if (ticker, day) in stats_by_day
    ]

    def run_unit(unit):
        scenario, ticker, day = unit
        trades = per_day[(ticker, day)]
        try:
            return unit, _scenario_day_unit(
                scenario, ticker, day, trades, stats_by_day[(ticker, day)]
            ), None
        except Exception as exc:
            return unit, None, f"{exc}\n{traceback.format_exc(limit=2)}"

    results = {}
    if workers > 1 and len(units) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_unit, units))
    else:
        outcomes = [run_unit(unit) for unit in units]
    for unit, value, error in outcomes:
        scenario, ticker, day = unit
        if error is not None:
            failures.append(
                {"stage": "metaorders", "unit": f"{scenario.label}/{ticker}/{day}", "error": error}
            )
        else:
            results[unit] = value

    for scenario in cfg.scenarios:
        per_ticker: dict[str, list[engine.Metaorder]] = {}
        scenario_units = sorted(
            (k for k in results if k[0].label == scenario.label),
            key=lambda k: (k[1], k[2]),
        )
        for key in scenario_units:
            _sc, ticker, day = key
            assignment, built = results[key]
            per_ticker.setdefault(ticker, []).extend(built.metaorders)
            scenario_assignments[(scenario.label, ticker, day)] = assignment.trader_ids
            if cfg.dump_assignments:
                trades = per_day[(ticker, day)]
                rows = "".join(
                    f"{t.seq_no},{tid}\n" for t, tid in zip(trades, assignment.trader_ids)
                )
                writer.write(
                    f"{scenario.label}/assignments/{ticker}_{day}.csv",
                    "seq_no,trader_id\n" + rows,
                    stage="assignment",
                    unit=f"{scenario.label}/{ticker}/{day}",
                )
        scenario_metaorders[scenario.label] = per_ticker
        for ticker, metas in sorted(per_ticker.items()):
            writer.write(
                f"{scenario.label}/{ticker}_metaorders.csv",
                engine.write_metaorder_table(metas),
                stage="metaorders",
                unit=f"{scenario.label}/{ticker}",
            )
            writer.write(
                f"{scenario.label}/{ticker}_children.csv",
                engine.write_child_dump(metas),
                stage="metaorders",
                unit=f"{scenario.label}/{ticker}",
            )

    # ---- analytics + lmf per scenario ---------------------------------------
    alpha_rows_all: list[dict] = []
    for scenario in cfg.scenarios:
        per_ticker = scenario_metaorders.get(scenario.label, {})
        pooled = [m for metas in per_ticker.values() for m in metas]
        label = scenario.label
        if a["sql"] and pooled:
            def _sql():
                sql = analytics.sql_curve(pooled, n_bins=a["bins"])
                writer.write(
                    f"{label}/plot_data/sql_pooled.csv",
                    emit_plot_data("sql", sql=sql),
                    stage="analyze_sql",
                    unit=label,
                )
                writer.write(
                    f"{label}/fits/sql_fit.json",
                    _json_dumps(_sql_fit_report(sql)),
                    stage="analyze_sql",
                    unit=label,
                )

            _try_stage(failures, "analyze_sql", label, _sql)
        if a["duration"] and pooled:
            def _duration():
                hist, curve = analytics.duration_curve(pooled, n_bins=a["bins"])
                writer.write(
                    f"{label}/plot_data/duration.csv",
                    emit_plot_data("duration", hist=hist, curve=curve),
                    stage="analyze_duration",
                    unit=label,
                )

            _try_stage(failures, "analyze_duration", label, _duration)
        if a["profile"] and pooled:
            def _profile():
                curve, fit = analytics.fit_execution_profile(
                    pooled, min_children=a["min_children"], phi_bins=a["phi_bins"]
                )
                writer.write(
                    f"{label}/plot_data/profile.csv",
                    emit_plot_data("profile", curve=curve, fit=fit, model=power_model),
                    stage="analyze_profile",
                    unit=label,
                )
                writer.write(
                    f"{label}/fits/profile_fit.json",
                    _json_dumps(fit.as_dict()),
                    stage="analyze_profile",
                    unit=label,
                )

            _try_stage(failures, "analyze_profile", label, _profile)
        if a["decay"] and pooled:
            def _decay():
                zs, ys = [], []
                for ticker, metas in sorted(per_ticker.items()):
                    by_day = {}
                    for m in metas:
                        by_day.setdefault(m.date, []).append(m)
                    for day, day_metas in sorted(by_day.items()):
                        z, y = analytics.collect_decay_points(
                            day_metas,
                            per_day[(ticker, day)],
                            min_children=a["min_children"],
                            z_max=a["z_max"],
                        )
                        zs.append(z)
                        ys.append(y)
                z = np.concatenate(zs) if zs else np.array([])
                y = np.concatenate(ys) if ys else np.array([])
                curve, fit = analytics.fit_decay(z, y, z_bins=a["z_bins"], z_max=a["z_max"])
                writer.write(
                    f"{label}/plot_data/decay.csv",
                    emit_plot_data("decay", curve=curve, fit=fit, model=decay_kernel_model),
                    stage="analyze_decay",
                    unit=label,
                )
                writer.write(
                    f"{label}/fits/decay_fit.json",
                    _json_dumps(fit.as_dict()),
                    stage="analyze_decay",
                    unit=label,
                )

            _try_stage(failures, "analyze_decay", label, _decay)
        if a["lmf"]:
            def _lmf():
                rows = _lmf_stage(cfg, scenario, per_day, scenario_assignments, writer, a)
                alpha_rows_all.extend(rows)

            _try_stage(failures, "lmf", label, _lmf)

    if alpha_rows_all:
        columns = ["scenario", "stock", "alpha_minus_1", "gamma", "abs_dev"]
        writer.write(
            "lmf_compare.csv",
            _write_csv(alpha_rows_all, columns),
            stage="lmf_compare",
            unit="all",
        )

    # ---- simulator scenarios -------------------------------------------------
    for sim_raw in cfg.simulator:
        sim_label = sim_raw.get("label", f"sim-{sim_raw.get('seed', 0)}")
        def _sim():
            kwargs = {k: v for k, v in sim_raw.items() if k != "label"}
            sim_cfg = SimConfig(**kwargs)
            output = simulate(sim_cfg)
            report = true_run_check(output)
            writer.write(
                f"sim/{sim_label}_config.json", _json_dumps(json.loads(sim_cfg.to_json())),
                stage="simulate", unit=sim_label,
            )
            writer.write(
                f"sim/{sim_label}_signs.csv",
                "index,sign,trader_id\n"
                + "".join(
                    f"{i},{int(s)},{int(t)}\n"
                    for i, (s, t) in enumerate(zip(output.signs, output.trader_ids))
                ),
                stage="simulate",
                unit=sim_label,
            )
            writer.write(
                f"sim/{sim_label}_metaorders.csv",
                "trader,start,length,sign,truncated\n"
                + "".join(
                    f"{m.trader},{m.start},{m.length},{m.sign},{int(m.truncated)}\n"
                    for m in output.true_metaorders
                ),
                stage="simulate",
                unit=sim_label,
            )
            writer.write(
                f"sim/{sim_label}_check.json", _json_dumps(report), stage="simulate", unit=sim_label
            )

        _try_stage(failures, "simulate", sim_label, _sim)

    manifest = {
        "config": {
            "data_glob": cfg.data_glob,
            "tickers": cfg.tickers,
            "date_range": [
                cfg.date_start.isoformat() if cfg.date_start else None,
                cfg.date_end.isoformat() if cfg.date_end else None,
            ],
            "scenarios": [s.__dict__ for s in cfg.scenarios],
            "analytics": a,
            "simulator": cfg.simulator,
            "dump_assignments": cfg.dump_assignments,
        },
        "run_dir": str(run_dir),
        "artifacts": writer.artifacts,
        "failures": failures,
    }
    (run_dir / "manifest.json").write_text(_json_dumps(manifest))
    return manifest


def _sql_fit_report(sql: analytics.SqlCurve) -> dict:
    return {
        "model": "impact = prefactor * (Q/V)^slope",
        "slope": sql.slope,
        "prefactor": sql.prefactor,
        "sqrt_law_prefactor": sql.sqrt_law_prefactor,
        "pooled": sql.pooled,
        "n_points": int(sql.curve.count.sum()),
    }


def _try_stage(failures: list, stage: str, unit: str, fn) -> None:
    try:
        fn()
    except InsufficientDataError as exc:
        failures.append({"stage": stage, "unit": unit, "error": str(exc)})
    except Exception as exc:
        failures.append(
            {"stage": stage, "unit": unit, "error": f"{exc}\n{traceback.format_exc(limit=2)}"}
        )


def _lmf_stage(cfg, scenario, per_day, scenario_assignments, writer, a) -> list[dict]:
    """Per-stock ACF/gamma plus ST-run-length alpha, then the comparison."""
    tickers = sorted({ticker for (ticker, _day) in per_day})
    alpha_fits: dict[str, lmf.PowerLawFit] = {}
    gamma_fits: dict[str, lmf.GammaFit] = {}
    reports = {}
    for ticker in tickers:
        days = sorted(day for (t, day) in per_day if t == ticker)
        if not days:
            continue
        signs = np.concatenate(
            [[t.sign for t in per_day[(ticker, day)]] for day in days]
        ).astype(np.int64)
        trader_seqs: dict[int, list[int]] = {}
        for day in days:
            ids = scenario_assignments.get((scenario.label, ticker, day))
            if ids is None:
                continue
            for t, tid in zip(per_day[(ticker, day)], ids):
                trader_seqs.setdefault(int(tid), []).append(t.sign)
        sequences = {k: np.asarray(v) for k, v in trader_seqs.items()}
        labels = lmf.classify_traders(
            sequences, level=a["st_test_level"], min_orders=a["min_orders"]
        )
        st_lengths = np.concatenate(
            [lmf.run_lengths(sequences[k]) for k, lab in sorted(labels.items()) if lab == "ST"]
            or [np.array([], dtype=np.int64)]
        )
        report = {
            "ticker": ticker,
            "n_signs": int(signs.size),
            "n_traders_labelled": len(labels),
            "n_st": sum(1 for v in labels.values() if v == "ST"),
            "estimator_variant": "centered" if a["acf_centered"] else "raw",
        }
        try:
            tau_cap = a["tau_max"] or lmf.default_tau_range(signs.size)[1]
            estimate = lmf.acf(signs, tau_max=min(tau_cap, signs.size - 2), centered=a["acf_centered"])
            gfit = lmf.fit_gamma(estimate, tau_min=a["tau_min"], tau_max=a["tau_max"])
            gamma_fits[ticker] = gfit
            report.update(
                {
                    "gamma": gfit.gamma,
                    "gamma_ci": gfit.half_width,
                    "tau_range": [gfit.tau_min, gfit.tau_max],
                    "r_squared": gfit.r_squared,
                }
            )
        except (InsufficientDataError, ParameterError) as exc:
            report["gamma_error"] = str(exc)
        try:
            afit = lmf.fit_alpha(st_lengths)
            alpha_fits[ticker] = afit
            report.update(
                {
                    "alpha_pdf": afit.alpha_pdf,
                    "alpha_lmf": afit.alpha_lmf,
                    "x_min": afit.x_min,
                    "ks": afit.ks_distance,
                    "n_tail": afit.n_tail,
                }
            )
        except Exception as exc:
            report["alpha_error"] = str(exc)
        reports[ticker] = report
        writer.write(
            f"{scenario.label}/lmf/{ticker}.json",
            _json_dumps(report),
            stage="lmf",
            unit=f"{scenario.label}/{ticker}",
        )
    comparison = lmf.lmf_compare(alpha_fits, gamma_fits)
    writer.write(
        f"{scenario.label}/plot_data/alpha_gamma.csv",
        emit_plot_data("alpha_gamma", comparison=comparison),
        stage="lmf",
        unit=scenario.label,
    )
    return [
        {
            "scenario": scenario.label,
            "stock": r["stock"],
            "alpha_minus_1": repr(r["alpha_minus_1"]),
            "gamma": repr(r["gamma"]),
            "abs_dev": repr(r["abs_dev"]),
        }
        for r in comparison.rows
    ]
