"""Mapping of trades onto N synthetic traders.

A participation profile gives each trader a normalized weight; every trade
then draws one uniform and lands in the trader whose cumulative-weight
interval contains it.  Sampling is without repetition: each trade belongs
to exactly one trader and per-trader chronological order is preserved by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParameterError
from .rng import substream

__all__ = [
    "ParticipationProfile",
    "Assignment",
    "build_profile",
    "assign_trades",
    "truncated_pareto_cdf",
    "sample_truncated_pareto",
]


@dataclass(frozen=True)
class ParticipationProfile:
    """Normalized trader participation weights with cumulative thresholds."""

    n_traders: int
    kind: str  # "homogeneous" | "power_law"
    raw_freq: np.ndarray
    weights: np.ndarray
    cum: np.ndarray
    delta: float | None = None
    f_min: float | None = None
    f_max: float | None = None

    def __post_init__(self) -> None:
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ParameterError("participation weights must sum to 1")
        if abs(float(self.cum[-1]) - 1.0) > 1e-12:
            raise ParameterError("cumulative thresholds must end at 1")


@dataclass(frozen=True)
class Assignment:
    """trader_id per trade (1-based), aligned index-for-index with the trades."""

    trader_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.trader_ids)


def truncated_pareto_cdf(f, delta: float, f_min: float, f_max: float):
    """CDF of the density proportional to f^(-delta) on [f_min, f_max]."""
    f = np.asarray(f, dtype=float)
    num = 1.0 - (f_min / f) ** (delta - 1.0)
    den = 1.0 - (f_min / f_max) ** (delta - 1.0)
    return np.clip(num / den, 0.0, 1.0)


def sample_truncated_pareto(
    rng: np.random.Generator, size: int, delta: float, f_min: float, f_max: float
) -> np.ndarray:
    """Inverse-transform draws from the truncated Pareto density f^(-delta)."""
    u = rng.random(size)
    den = 1.0 - (f_min / f_max) ** (delta - 1.0)
    return f_min * (1.0 - u * den) ** (-1.0 / (delta - 1.0))


def build_profile(
    n_traders: int,
    kind: str = "homogeneous",
    delta: float = 2.0,
    f_min: float = 1.0,
    f_max: float | None = None,
    seed: int = 0,
    labels: tuple = (),
) -> ParticipationProfile:
    """Draw per-trader frequencies and normalize them into a profile.

    Homogeneous profiles give every trader the same frequency; power-law
    profiles draw frequencies from a truncated Pareto with exponent
    ``delta`` on [f_min, f_max].  ``f_max`` defaults to the number of
    trades of the day when the caller knows it, else to 1e6.  ``labels``
    feed the substream derivation so per-(ticker, day) profiles are
    independent.
    """
    if n_traders < 1:
        raise ParameterError("n_traders must be >= 1")
    if kind == "homogeneous":
        freq = np.ones(n_traders)
    elif kind == "power_law":
        if delta <= 1.0:
            raise ParameterError("power-law exponent delta must be > 1")
        if f_max is None:
            f_max = 1e6
        if not (1.0 <= f_min <= f_max):
            raise ParameterError("need 1 <= f_min <= f_max")
        rng = substream(seed, "profile", *labels)
        freq = sample_truncated_pareto(rng, n_traders, delta, f_min, f_max)
    else:
        raise ParameterError(f"unknown participation kind: {kind!r}")
    weights = freq / freq.sum()
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # pin the top threshold against roundoff
    return ParticipationProfile(
        n_traders=n_traders,
        kind=kind,
        raw_freq=freq,
        weights=weights,
        cum=cum,
        delta=delta if kind == "power_law" else None,
        f_min=f_min if kind == "power_law" else None,
        f_max=f_max if kind == "power_law" else None,
    )


def assign_from_uniforms(uniforms: np.ndarray, profile: ParticipationProfile) -> np.ndarray:
    """Map uniform draws to 1-based trader ids via c_{j-1} <= U < c_j."""
    ids = np.searchsorted(profile.cum, uniforms, side="right") + 1
    # U == 1.0 exactly falls past the last threshold; give it to trader N
    return np.minimum(ids, profile.n_traders).astype(np.int64)


def assign_trades(
    trades,
    profile: ParticipationProfile,
    seed: int = 0,
    labels: tuple = (),
) -> Assignment:
    """Assign each trade, in order, to one synthetic trader.

    Deterministic given (trades, profile, seed, labels) on every platform.
    ``trades`` only contributes its length and ordering; pass the
    (ticker, date) via ``labels`` to keep per-day substreams independent.
    """
    n = len(trades)
    rng = substream(seed, "assign", *labels)
    uniforms = rng.random(n)
    return Assignment(trader_ids=assign_from_uniforms(uniforms, profile))


def split_by_trader(trades, assignment: Assignment) -> dict[int, list[int]]:
    """Indices of each trader's trades, preserving chronological order."""
    if len(trades) != len(assignment.trader_ids):
        raise ContractError(
            f"{len(trades)} trades but {len(assignment.trader_ids)} assignments"
        )
    by_trader: dict[int, list[int]] = {}
    for idx, tid in enumerate(assignment.trader_ids):
        by_trader.setdefault(int(tid), []).append(idx)
    return by_trader
