import math
from datetime import date as Date
from datetime import datetime, timedelta

import pytest

from metaorders.engine import Metaorder, ChildOrder
from metaorders.market_data import TradeEvent


def make_trade(
    ticker="AGL",
    day=Date(2023, 1, 3),
    ts=None,
    seq_no=1,
    sign=1,
    price=100.0,
    volume=10.0,
    mid_before=100.0,
    mid_after=100.0,
    mid_after_delayed=None,
):
    return TradeEvent(
        mic="XJSE",
        ticker=ticker,
        listing_id=1,
        date=day,
        timestamp=ts or datetime(2023, 1, 3, 9, 0, 0),
        seq_no=seq_no,
        sign=sign,
        price=price,
        volume=volume,
        mid_before=mid_before,
        mid_after=mid_after,
        mid_after_delayed=mid_after_delayed,
    )


def make_trade_sequence(signs, ticker="AGL", day=Date(2023, 1, 3), mids=None, volumes=None):
    """Trades one minute apart with the given signs (and optional mids/volumes)."""
    base = datetime.combine(day, datetime.min.time()) + timedelta(hours=9)
    trades = []
    for i, sign in enumerate(signs):
        mid_b, mid_a = (100.0, 100.0) if mids is None else mids[i]
        vol = 10.0 if volumes is None else volumes[i]
        trades.append(
            make_trade(
                ticker=ticker,
                day=day,
                ts=base + timedelta(minutes=i),
                seq_no=i + 1,
                sign=sign,
                price=mid_b,
                volume=vol,
                mid_before=mid_b,
                mid_after=mid_a,
            )
        )
    return trades


def make_metaorder(
    ticker="AGL",
    x=0.01,
    impact=None,
    sigma=0.02,
    avg_volume=1e6,
    n_children=2,
    duration=5.0,
    sign=1,
    day=Date(2023, 1, 3),
    trader_id=1,
    children=None,
):
    """Metaorder with Q/avg_volume_20 == x; impact defaults to the sqrt law with Y=0.5."""
    if impact is None:
        impact = 0.5 * sigma * math.sqrt(x)
    start = datetime.combine(day, datetime.min.time()) + timedelta(hours=10)
    return Metaorder(
        ticker=ticker,
        date=day,
        trader_id=trader_id,
        sign=sign,
        start_time=start,
        end_time=start + timedelta(minutes=duration),
        duration_minutes=duration,
        n_children=n_children,
        total_volume=x * avg_volume,
        m_start=100.0,
        m_end=100.0 * math.exp(sign * impact),
        children=children or [],
        impact_simple=impact,
        impact_shortfall=0.0,
        impact_avg_per_trade=0.0,
        daily_volume=avg_volume,
        intraday_vol=sigma,
        avg_volume_20=avg_volume,
        avg_vol_20=sigma,
    )


def with_profile_children(meta: Metaorder, phis, impacts):
    """Attach children whose (phi, impact-vs-m0) pairs are exactly as given."""
    children = []
    total = meta.total_volume
    prev_phi = 0.0
    base = meta.start_time
    for i, (phi, imp) in enumerate(zip(phis, impacts), start=1):
        mid_after = meta.m_start * math.exp(meta.sign * imp)
        children.append(
            ChildOrder(
                index=i,
                timestamp=base + timedelta(seconds=i),
                volume=(phi - prev_phi) * total,
                mid_before=mid_after,
                mid_after=mid_after,
                phi=phi,
            )
        )
        prev_phi = phi
    meta.children = children
    meta.n_children = len(children)
    meta.m_end = children[-1].mid_after
    meta.impact_simple = impacts[-1]
    return meta


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    from metaorders.corpus import make_corpus

    path = tmp_path_factory.mktemp("corpus")
    make_corpus(path, n_days=3, trades_per_day=400, seed=7)
    return path
