"""TAQ trade ingestion and per-day liquidity/volatility statistics.

Input files are delimiter-separated with one header row naming the trade
columns (see ``COLUMN_MAP``).  Rows that fail validation are dropped and
counted per reason; parsing never aborts on a bad print.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import date as Date
from datetime import datetime

from .errors import DataError, SchemaError

__all__ = [
    "TradeEvent",
    "DailyStats",
    "ParseResult",
    "COLUMN_MAP",
    "parse_trades",
    "serialize_trades",
    "compute_daily_stats",
    "rolling_stats",
    "group_by_day",
    "write_daily_stats",
    "read_trades_file",
]

# our field name -> column name in the feed header
COLUMN_MAP: dict[str, str] = {
    "mic": "MIC",
    "ticker": "Ticker",
    "listing_id": "ListingId",
    "date": "Date",
    "timestamp": "DateTime",
    "seq_no": "ExchangeSequenceNumber",
    "sign": "Trade Sign",
    "price": "Trade Price",
    "volume": "Volume",
    "mid_before": "Mid-price before",
    "mid_after": "Mid-price after(immediate)",
    "mid_after_delayed": "Mid-price after(delayed)",
}


@dataclass(slots=True)
class TradeEvent:
    """One executed trade, with the surrounding mid-prices."""

    mic: str
    ticker: str
    listing_id: int
    date: Date
    timestamp: datetime
    seq_no: int
    sign: int
    price: float
    volume: float
    mid_before: float
    mid_after: float
    # mid just before the next trade; ingested but never analysed
    mid_after_delayed: float | None = None


@dataclass(slots=True)
class DailyStats:
    """Per-(ticker, day) volume and intraday volatility."""

    ticker: str
    date: Date
    daily_volume: float
    intraday_vol: float
    intraday_vol_alt: float
    avg_volume_20: float | None = None
    avg_vol_20: float | None = None


@dataclass
class ParseResult:
    """Accepted events plus a per-reason rejection report."""

    events: list[TradeEvent]
    rejections: Counter = field(default_factory=Counter)
    n_rows: int = 0

    @property
    def n_rejected(self) -> int:
        return sum(self.rejections.values())


def _parse_row(row: dict[str, str], cols: dict[str, str]) -> tuple[TradeEvent | None, str | None]:
    try:
        ts = datetime.fromisoformat(row[cols["timestamp"]].strip())
    except ValueError:
        return None, "bad_timestamp"
    try:
        day = Date.fromisoformat(row[cols["date"]].strip())
    except ValueError:
        return None, "bad_date"
    try:
        sign = int(row[cols["sign"]])
    except ValueError:
        return None, "bad_sign"
    if sign not in (1, -1):
        return None, "bad_sign"
    try:
        price = float(row[cols["price"]])
        volume = float(row[cols["volume"]])
        mid_before = float(row[cols["mid_before"]])
        mid_after = float(row[cols["mid_after"]])
        seq_no = int(row[cols["seq_no"]])
        listing_id = int(row[cols["listing_id"]])
    except ValueError:
        return None, "bad_number"
    if volume <= 0:
        return None, "nonpositive_volume"
    if price <= 0:
        return None, "nonpositive_price"
    if mid_before <= 0 or mid_after <= 0:
        return None, "nonpositive_mid"
    # delayed mid is carried but unused: tolerate a blank/bad field
    raw_delayed = row.get(cols["mid_after_delayed"], "") or ""
    try:
        delayed = float(raw_delayed) if raw_delayed.strip() else None
    except ValueError:
        delayed = None
    event = TradeEvent(
        mic=row[cols["mic"]].strip(),
        ticker=row[cols["ticker"]].strip(),
        listing_id=listing_id,
        date=day,
        timestamp=ts,
        seq_no=seq_no,
        sign=sign,
        price=price,
        volume=volume,
        mid_before=mid_before,
        mid_after=mid_after,
        mid_after_delayed=delayed,
    )
    return event, None


def parse_trades(
    source,
    schema: dict[str, str] | None = None,
    delimiter: str = ",",
) -> ParseResult:
    """Parse a delimiter-separated trade file into validated events.

    ``source`` may be a text file object, a path, or a string of file
    content.  Events are returned sorted by (timestamp, seq_no).  Rows with
    a sign outside {+1, -1}, non-positive volume/price/mid, or unparseable
    fields are dropped and counted in the rejection report.

    Raises SchemaError naming the first missing mandatory column; an empty
    file yields an empty result instead of an error.
    """
    cols = dict(COLUMN_MAP)
    if schema:
        cols.update(schema)

    if hasattr(source, "read"):
        fh = source
        close = False
    elif isinstance(source, str):
        fh = io.StringIO(source)
        close = True
    else:  # a path
        fh = open(source, "r", newline="")
        close = True
    try:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            return ParseResult(events=[])
        header = {name.strip() for name in reader.fieldnames}
        for column in cols.values():
            if column not in header:
                raise SchemaError(f"missing mandatory column: {column!r}")
        result = ParseResult(events=[])
        for row in reader:
            result.n_rows += 1
            event, reason = _parse_row(row, cols)
            if event is None:
                result.rejections[reason] += 1
            else:
                result.events.append(event)
    finally:
        if close:
            fh.close()
    result.events.sort(key=lambda e: (e.timestamp, e.seq_no))
    return result


def serialize_trades(events: list[TradeEvent], delimiter: str = ",") -> str:
    """Write events back in the input schema (lossless for analysed columns)."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(list(COLUMN_MAP.values()))
    for e in events:
        writer.writerow(
            [
                e.mic,
                e.ticker,
                e.listing_id,
                e.date.isoformat(),
                e.timestamp.isoformat(sep=" ", timespec="microseconds"),
                e.seq_no,
                e.sign,
                repr(e.price),
                repr(e.volume),
                repr(e.mid_before),
                repr(e.mid_after),
                "" if e.mid_after_delayed is None else repr(e.mid_after_delayed),
            ]
        )
    return out.getvalue()


def read_trades_file(path, schema: dict[str, str] | None = None, delimiter: str = ",") -> ParseResult:
    with open(path, "r", newline="") as fh:
        return parse_trades(fh, schema=schema, delimiter=delimiter)


def group_by_day(events: list[TradeEvent]) -> dict[tuple[str, Date], list[TradeEvent]]:
    """Split a parsed stream into per-(ticker, day) chronological groups."""
    groups: dict[tuple[str, Date], list[TradeEvent]] = {}
    for e in events:
        groups.setdefault((e.ticker, e.date), []).append(e)
    return groups


def compute_daily_stats(trades: list[TradeEvent]) -> DailyStats:
    """Daily volume and intraday volatility for one (ticker, day).

    Volume is the exact sum of trade volumes.  Volatility is the day's
    mid-price range over the opening mid, where the opening mid is the
    first trade's mid-before and the extrema scan both the before and
    after mid streams.  The alternative log-range measure is computed
    alongside but never consumed by analytics.
    """
    if not trades:
        raise DataError("no trades for the day")
    m_open = trades[0].mid_before
    if m_open <= 0:
        raise DataError("non-positive opening mid")
    mids_min = min(min(t.mid_before, t.mid_after) for t in trades)
    mids_max = max(max(t.mid_before, t.mid_after) for t in trades)
    return DailyStats(
        ticker=trades[0].ticker,
        date=trades[0].date,
        daily_volume=math.fsum(t.volume for t in trades),
        intraday_vol=(mids_max - mids_min) / m_open,
        intraday_vol_alt=math.log(mids_max) - math.log(mids_min),
    )


def rolling_stats(days: list[DailyStats], window: int = 20) -> list[DailyStats]:
    """Fill trailing moving averages of volume and volatility.

    The window covers up to ``window`` trading days ending at (and
    including) the current day; early days average over what exists.
    """
    out: list[DailyStats] = []
    for i, day in enumerate(days):
        chunk = days[max(0, i - window + 1) : i + 1]
        out.append(
            replace(
                day,
                avg_volume_20=math.fsum(d.daily_volume for d in chunk) / len(chunk),
                avg_vol_20=math.fsum(d.intraday_vol for d in chunk) / len(chunk),
            )
        )
    return out


DAILY_STATS_COLUMNS = [
    "ticker",
    "date",
    "daily_volume",
    "intraday_vol",
    "intraday_vol_alt",
    "avg_volume_20",
    "avg_vol_20",
]


def write_daily_stats(days: list[DailyStats], delimiter: str = ",") -> str:
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(DAILY_STATS_COLUMNS)
    for d in days:
        writer.writerow(
            [
                d.ticker,
                d.date.isoformat(),
                repr(d.daily_volume),
                repr(d.intraday_vol),
                repr(d.intraday_vol_alt),
                "" if d.avg_volume_20 is None else repr(d.avg_volume_20),
                "" if d.avg_vol_20 is None else repr(d.avg_vol_20),
            ]
        )
    return out.getvalue()
