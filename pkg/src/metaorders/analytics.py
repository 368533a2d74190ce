"""The four stylised-fact analyses over reconstructed metaorders.

Every curve here works on bin means, normalised with the 20-day moving
averages of daily volume and intraday volatility.  Fits go through the
damped least-squares machinery in :mod:`metaorders.fitting`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .binning import BinnedCurve, bin_with_edges, linear_bin, log_bin
from .engine import Metaorder, child_impact_profile
from .errors import InsufficientDataError, JoinError
from .fitting import FitResult, decay_kernel_model, nls_fit, power_model
from .market_data import TradeEvent

__all__ = [
    "SqlCurve",
    "sql_curve",
    "duration_curve",
    "fit_execution_profile",
    "collect_decay_points",
    "fit_decay",
    "MIN_BIN_COUNT",
]

# bins thinner than this are excluded from fits
MIN_BIN_COUNT = 5


def _require_averages(m: Metaorder) -> None:
    if m.avg_volume_20 is None or m.avg_vol_20 is None:
        raise JoinError(m.ticker, m.date)


@dataclass
class SqlCurve:
    """Binned impact vs participation rate with a fitted power law."""

    curve: BinnedCurve
    slope: float
    prefactor: float  # Y in pooled mode; Y * (typical sigma) per stock
    sqrt_law_prefactor: float  # prefactor refit with the exponent pinned at 0.5
    pooled: bool

    def theory(self, x) -> np.ndarray:
        return self.sqrt_law_prefactor * np.sqrt(np.asarray(x, dtype=float))


def _loglog_fit(curve: BinnedCurve, min_bins: int = 2) -> tuple[float, float]:
    """OLS of log10(mean) on log10(x) over occupied bins with positive mean."""
    ok = curve.occupied & np.isfinite(curve.mean_y) & (curve.mean_y > 0)
    if int(ok.sum()) < min_bins:
        raise InsufficientDataError(
            f"insufficient bins for a slope fit: {int(ok.sum())} occupied"
        )
    lx = np.log10(curve.x_gmean[ok])
    ly = np.log10(curve.mean_y[ok])
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(10.0**intercept)


def sql_curve(metaorders: list[Metaorder], n_bins: int = 40, pooled: bool = True) -> SqlCurve:
    """Square-root-law curve: impact vs Q over 20-day average daily volume.

    In pooled mode impacts are divided by the 20-day average intraday
    volatility first, so stocks with different volatilities stack onto one
    curve and the fitted prefactor is Y itself.
    """
    xs, ys = [], []
    for m in metaorders:
        _require_averages(m)
        x = m.total_volume / m.avg_volume_20
        y = m.impact_simple / m.avg_vol_20 if pooled else m.impact_simple
        xs.append(x)
        ys.append(y)
    curve = log_bin(xs, ys, n_bins=n_bins)
    slope, prefactor = _loglog_fit(curve)
    # refit the prefactor with the square-root exponent pinned
    ok = curve.occupied & np.isfinite(curve.mean_y) & (curve.mean_y > 0)
    resid = np.log10(curve.mean_y[ok]) - 0.5 * np.log10(curve.x_gmean[ok])
    sqrt_prefactor = float(10.0 ** resid.mean())
    return SqlCurve(
        curve=curve,
        slope=slope,
        prefactor=prefactor,
        sqrt_law_prefactor=sqrt_prefactor,
        pooled=pooled,
    )


def duration_curve(
    metaorders: list[Metaorder], n_bins: int = 40
) -> tuple[BinnedCurve, BinnedCurve]:
    """(duration histogram, normalised impact vs duration) on log-spaced bins.

    Impact is normalised by sigma * sqrt(Q / V) (20-day averages), which is
    flat in duration when impact does not depend on T.  Zero durations are
    mapped into the smallest bin.
    """
    ts, ys = [], []
    for m in metaorders:
        _require_averages(m)
        norm = m.avg_vol_20 * math.sqrt(m.total_volume / m.avg_volume_20)
        ts.append(m.duration_minutes)
        ys.append(m.impact_simple / norm)
    t = np.asarray(ts, dtype=float)
    positive = t[t > 0]
    floor = positive.min() if positive.size else 1.0
    t = np.where(t > 0, t, floor)
    hist = log_bin(t, np.zeros_like(t), n_bins=n_bins)
    curve = log_bin(t, ys, n_bins=n_bins)
    return hist, curve


def fit_execution_profile(
    metaorders: list[Metaorder],
    min_children: int = 10,
    phi_bins: int = 25,
) -> tuple[BinnedCurve, FitResult]:
    """Fit the within-metaorder impact profile gamma1 * phi^gamma2.

    Pools (phi, impact / (sigma * sqrt(Q))) over all children of metaorders
    with at least ``min_children`` child orders, bins phi on [0, 1], and
    fits the power form to the bin means (bins with fewer than
    MIN_BIN_COUNT points are dropped).  The square-root benchmark
    corresponds to gamma2 = 0.5.
    """
    phis, ys = [], []
    for m in metaorders:
        if m.n_children < min_children:
            continue
        _require_averages(m)
        norm = m.avg_vol_20 * math.sqrt(m.total_volume)
        for phi, impact in child_impact_profile(m):
            phis.append(phi)
            ys.append(impact / norm)
    curve = linear_bin(phis, ys, n_bins=phi_bins, lo=0.0, hi=1.0)
    usable = curve.occupied & (curve.count >= MIN_BIN_COUNT)
    if int(usable.sum()) < 5:
        raise InsufficientDataError(
            f"execution-profile fit needs >= 5 occupied bins, got {int(usable.sum())}"
        )
    xb = curve.bin_centers[usable]
    yb = curve.mean_y[usable]
    init = [float(np.max(np.abs(yb))), 0.5]
    fit = nls_fit(power_model, xb, yb, init, param_names=["gamma1", "gamma2"])
    fit.settings.update({"min_children": min_children, "phi_bins": phi_bins})
    return curve, fit


def collect_decay_points(
    metaorders: list[Metaorder],
    trades: list[TradeEvent],
    min_children: int = 10,
    z_max: float = 10.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Post-execution samples (z, normalised impact) for the decay fit.

    For each metaorder the prevailing mid is sampled at every later trade
    event of the day out to t = z_max * T, measured against the metaorder's
    opening mid and normalised by sigma * sqrt(Q).  The metaorder's own end
    (z = 1, the peak) anchors each trajectory.  Zero-duration metaorders
    have no rescaled clock and are skipped.
    """
    times = np.array(
        [t.timestamp.timestamp() for t in trades], dtype=float
    )  # seconds; same day so offsets are exact enough
    mids = np.array([t.mid_after for t in trades], dtype=float)
    zs: list[float] = []
    ys: list[float] = []
    for m in metaorders:
        if m.n_children < min_children or m.duration_minutes <= 0:
            continue
        _require_averages(m)
        norm = m.avg_vol_20 * math.sqrt(m.total_volume)
        log_m0 = math.log(m.m_start)
        zs.append(1.0)
        ys.append(m.impact_simple / norm)
        start = m.start_time.timestamp()
        end = m.end_time.timestamp()
        horizon = start + z_max * (end - start)
        lo = np.searchsorted(times, end, side="right")
        hi = np.searchsorted(times, horizon, side="right")
        for k in range(lo, hi):
            t_min = (times[k] - start) / 60.0
            zs.append(t_min / m.duration_minutes)
            ys.append(m.sign * (math.log(mids[k]) - log_m0) / norm)
    return np.asarray(zs), np.asarray(ys)


def fit_decay(
    z,
    y,
    z_bins: int = 30,
    z_max: float = 10.0,
) -> tuple[BinnedCurve, FitResult]:
    """Fit gamma0 * (z^(1-beta) - (z-1)^(1-beta)) to binned decay samples.

    Bins are log-spaced on [1, z_max]; thin bins are dropped as in the
    execution-profile fit.  gamma0 equals the kernel value at z = 1, i.e.
    the normalised peak impact.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (z >= 1.0) & (z <= z_max)
    z, y = z[keep], y[keep]
    edges = np.logspace(0.0, np.log10(z_max), z_bins + 1)
    curve = bin_with_edges(z, y, edges)
    usable = curve.occupied & (curve.count >= MIN_BIN_COUNT)
    if int(usable.sum()) < 5:
        raise InsufficientDataError(
            f"decay fit needs >= 5 occupied bins, got {int(usable.sum())}"
        )
    xb = curve.bin_centers[usable]
    yb = curve.mean_y[usable]
    init = [float(np.max(np.abs(yb))), 0.25]
    fit = nls_fit(decay_kernel_model, xb, yb, init, param_names=["gamma0", "beta"])
    fit.settings.update({"z_bins": z_bins, "z_max": z_max})
    return curve, fit
