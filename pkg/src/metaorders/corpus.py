"""Deterministic synthetic TAQ corpus for demos and pipeline tests.

Fabricates per-ticker trade files in the feed schema: persistent trade
signs (a small order-splitting flow), a mid-price random walk that reacts
to signs, integer volumes, and strictly increasing timestamps.  Purely
synthetic; no market data involved.
"""

from __future__ import annotations

import csv
from datetime import date as Date
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .market_data import COLUMN_MAP
from .rng import substream
from .simulator import SimConfig, simulate

__all__ = ["make_corpus", "DEFAULT_TICKERS"]

DEFAULT_TICKERS = ("AAA", "BBB")


def _day_rows(ticker: str, day: Date, n_trades: int, seed: int, listing_id: int) -> list[list]:
    rng = substream(seed, "corpus", ticker, day)
    flow = simulate(
        SimConfig(
            alpha=1.5,
            n_traders=6,
            n_orders=n_trades,
            l_min=2,
            l_cap=500,
            participation="homogeneous",
            seed=int(rng.integers(2**31)),
        )
    )
    signs = flow.signs

    mid = 100.0 * (1.0 + 0.5 * rng.random())
    tick = 0.5
    open_ts = datetime.combine(day, datetime.min.time()) + timedelta(hours=9)
    seconds = np.sort(rng.uniform(60.0, 8.5 * 3600.0, size=n_trades))
    rows = []
    seq = int(rng.integers(10_000, 50_000))
    for i in range(n_trades):
        mid_before = mid
        # signed impact plus noise, rounded to the tick grid
        drift = signs[i] * tick * (rng.random() < 0.4)
        noise = tick * rng.integers(-1, 2) * (rng.random() < 0.2)
        mid = max(tick * 4, mid_before + drift + noise)
        mid_after = mid
        volume = int(np.ceil(rng.lognormal(mean=3.0, sigma=1.0)))
        price = mid_before + signs[i] * tick / 2.0
        ts = open_ts + timedelta(seconds=float(seconds[i]))
        seq += int(rng.integers(1, 200))
        rows.append(
            [
                "XSYN",
                ticker,
                listing_id,
                day.isoformat(),
                ts.isoformat(sep=" ", timespec="microseconds"),
                seq,
                int(signs[i]),
                f"{price:.4f}",
                volume,
                f"{mid_before:.4f}",
                f"{mid_after:.4f}",
                f"{mid_after:.4f}",
            ]
        )
    return rows


def make_corpus(
    out_dir,
    tickers=DEFAULT_TICKERS,
    start: Date = Date(2024, 1, 1),
    n_days: int = 3,
    trades_per_day: int = 400,
    seed: int = 7,
) -> list[Path]:
    """Write one trade file per ticker; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    listing_ids = {t: 400_000_000 + i for i, t in enumerate(sorted(tickers))}
    paths = []
    for ticker in tickers:
        path = out / f"{ticker}_trades.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(COLUMN_MAP.values()))
            day = start
            written = 0
            while written < n_days:
                if day.weekday() < 5:  # trading days only
                    writer.writerows(
                        _day_rows(ticker, day, trades_per_day, seed, listing_ids[ticker])
                    )
                    written += 1
                day += timedelta(days=1)
        paths.append(path)
    return paths
