"""Synthetic metaorder construction from assigned trades.

Each trader's chronological trade sequence is cut at every sign change;
a maximal same-sign run of length >= 2 becomes a metaorder.  Length-1
runs are kept aside so volume accounting over runs stays exact.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date as Date
from datetime import datetime

from .assignment import Assignment, split_by_trader
from .errors import DataError
from .market_data import DailyStats, TradeEvent

__all__ = [
    "ChildOrder",
    "Metaorder",
    "BuildResult",
    "build_metaorders",
    "metaorder_impact",
    "child_impact_profile",
    "write_metaorder_table",
    "write_child_dump",
    "METAORDER_COLUMNS",
]


@dataclass(slots=True)
class ChildOrder:
    """One executed child order inside a metaorder."""

    index: int  # 1-based position
    timestamp: datetime
    volume: float
    mid_before: float
    mid_after: float  # m_{i+1}: mid just after this child
    phi: float  # cumulative executed volume fraction


@dataclass(slots=True)
class Metaorder:
    ticker: str
    date: Date
    trader_id: int
    sign: int
    start_time: datetime
    end_time: datetime
    duration_minutes: float
    n_children: int
    total_volume: float
    m_start: float  # mid just before the first child
    m_end: float  # mid just after the last child
    children: list[ChildOrder]
    impact_simple: float
    impact_shortfall: float
    impact_avg_per_trade: float
    daily_volume: float
    intraday_vol: float
    avg_volume_20: float | None
    avg_vol_20: float | None


@dataclass
class BuildResult:
    """Metaorders plus the filtered length-1 runs (for volume accounting)."""

    metaorders: list[Metaorder]
    single_runs: list[tuple[int, int, float]]  # (trader_id, sign, volume)


def metaorder_impact(m_start: float, m_end: float, sign: int) -> float:
    """Signed log mid-price move over the metaorder.

    Positive when the price moved in the metaorder's own direction,
    for buys and sells alike.
    """
    if m_start <= 0 or m_end <= 0:
        raise DataError("mid-prices must be positive")
    return sign * (math.log(m_end) - math.log(m_start))


def child_impact_profile(m: Metaorder) -> list[tuple[float, float]]:
    """(phi_i, I_i) per child: cumulative volume fraction and impact so far.

    I_i anchors at the metaorder's opening mid, so the last entry equals
    the metaorder's simple impact.
    """
    if m.m_start <= 0:
        raise DataError("mid-prices must be positive")
    return [
        (c.phi, m.sign * (math.log(c.mid_after) - math.log(m.m_start)))
        for c in m.children
    ]


def _runs(indices: list[int], signs) -> list[list[int]]:
    runs: list[list[int]] = []
    current: list[int] = []
    for idx in indices:
        if current and signs[current[-1]] != signs[idx]:
            runs.append(current)
            current = []
        current.append(idx)
    if current:
        runs.append(current)
    return runs


def build_metaorders(
    trades: list[TradeEvent],
    assignment: Assignment,
    daily: DailyStats,
) -> BuildResult:
    """Cut each trader's trades into same-sign runs and compute features.

    ``trades`` must be a single (ticker, day) in chronological order and
    ``daily`` its stats (ideally with the 20-day averages filled).  Runs of
    length 1 are dropped from the metaorder list but returned separately
    so that total volume over runs still matches the day's volume.
    """
    by_trader = split_by_trader(trades, assignment)
    signs = [t.sign for t in trades]
    metaorders: list[Metaorder] = []
    singles: list[tuple[int, int, float]] = []
    for trader_id in sorted(by_trader):
        for run in _runs(by_trader[trader_id], signs):
            if len(run) < 2:
                t = trades[run[0]]
                singles.append((trader_id, t.sign, t.volume))
                continue
            metaorders.append(_make_metaorder(trades, run, trader_id, daily))
    metaorders.sort(key=lambda m: (m.trader_id, m.start_time))
    return BuildResult(metaorders=metaorders, single_runs=singles)


def _make_metaorder(
    trades: list[TradeEvent], run: list[int], trader_id: int, daily: DailyStats
) -> Metaorder:
    first, last = trades[run[0]], trades[run[-1]]
    sign = first.sign
    total = math.fsum(trades[i].volume for i in run)
    m_start = first.mid_before
    m_end = last.mid_after

    children: list[ChildOrder] = []
    executed = 0.0
    for k, i in enumerate(run, start=1):
        t = trades[i]
        executed += t.volume
        children.append(
            ChildOrder(
                index=k,
                timestamp=t.timestamp,
                volume=t.volume,
                mid_before=t.mid_before,
                mid_after=t.mid_after,
                phi=executed / total,
            )
        )
    children[-1].phi = 1.0  # exact by definition

    # auxiliary impact measures fill the output schema; analytics never use them
    vwap = math.fsum(trades[i].price * trades[i].volume for i in run) / total
    shortfall = sign * (math.log(vwap) - math.log(m_start))
    per_trade = math.fsum(
        sign * (math.log(trades[i].mid_after) - math.log(trades[i].mid_before))
        for i in run
    ) / len(run)

    return Metaorder(
        ticker=first.ticker,
        date=first.date,
        trader_id=trader_id,
        sign=sign,
        start_time=first.timestamp,
        end_time=last.timestamp,
        duration_minutes=(last.timestamp - first.timestamp).total_seconds() / 60.0,
        n_children=len(run),
        total_volume=total,
        m_start=m_start,
        m_end=m_end,
        children=children,
        impact_simple=metaorder_impact(m_start, m_end, sign),
        impact_shortfall=shortfall,
        impact_avg_per_trade=per_trade,
        daily_volume=daily.daily_volume,
        intraday_vol=daily.intraday_vol,
        avg_volume_20=daily.avg_volume_20,
        avg_vol_20=daily.avg_vol_20,
    )


METAORDER_COLUMNS = [
    "RIC",
    "Date",
    "Start time",
    "End time",
    "daily volume",
    "intraday volatility",
    "number child orders",
    "volume traded",
    "trade sign",
    "impact(shortfall)",
    "impact(ave per trade)",
    "impact(simple)",
    "20 AD volume",
    "20 AD volatility",
]


def write_metaorder_table(metaorders: list[Metaorder], delimiter: str = ",") -> str:
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(METAORDER_COLUMNS)
    for m in metaorders:
        writer.writerow(
            [
                m.ticker,
                m.date.isoformat(),
                m.start_time.isoformat(sep=" ", timespec="microseconds"),
                m.end_time.isoformat(sep=" ", timespec="microseconds"),
                repr(m.daily_volume),
                repr(m.intraday_vol),
                m.n_children,
                repr(m.total_volume),
                m.sign,
                repr(m.impact_shortfall),
                repr(m.impact_avg_per_trade),
                repr(m.impact_simple),
                "" if m.avg_volume_20 is None else repr(m.avg_volume_20),
                "" if m.avg_vol_20 is None else repr(m.avg_vol_20),
            ]
        )
    return out.getvalue()


def write_child_dump(metaorders: list[Metaorder], delimiter: str = ",") -> str:
    """(metaorder_id, i, phi, q_i, mid after, impact so far) per child."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["metaorder_id", "i", "phi", "q", "mid_after", "impact"])
    for mo_id, m in enumerate(metaorders):
        for (phi, impact), c in zip(child_impact_profile(m), m.children):
            writer.writerow([mo_id, c.index, repr(phi), repr(c.volume), repr(c.mid_after), repr(impact)])
    return out.getvalue()
