"""Log-spaced scatter binning used by all the impact curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError

__all__ = ["BinnedCurve", "log_bin", "linear_bin", "bin_with_edges"]


@dataclass
class BinnedCurve:
    """Per-bin aggregates of a scatter; empty bins keep count 0 and NaN mean."""

    bin_edges: np.ndarray  # n_bins + 1, strictly increasing (or a degenerate pair)
    bin_centers: np.ndarray  # geometric midpoints for log bins
    mean_y: np.ndarray  # NaN where count == 0
    count: np.ndarray
    stderr: np.ndarray  # sample std / sqrt(count); NaN where count < 2
    x_gmean: np.ndarray  # geometric mean of the x landing in each bin

    @property
    def occupied(self) -> np.ndarray:
        return self.count > 0


def _aggregate(x, y, idx, n_bins, edges, centers) -> BinnedCurve:
    count = np.bincount(idx, minlength=n_bins).astype(np.int64)
    sum_y = np.bincount(idx, weights=y, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, sum_y / np.maximum(count, 1), np.nan)
        sq = np.bincount(idx, weights=(y - mean[idx]) ** 2, minlength=n_bins)
        std = np.sqrt(np.where(count > 1, sq / np.maximum(count - 1, 1), np.nan))
        stderr = std / np.sqrt(count)
        log_sum_x = np.bincount(idx, weights=np.log(x), minlength=n_bins)
        gmean = np.where(count > 0, np.exp(log_sum_x / np.maximum(count, 1)), np.nan)
    mean[count == 0] = np.nan
    return BinnedCurve(
        bin_edges=edges,
        bin_centers=centers,
        mean_y=mean,
        count=count,
        stderr=stderr,
        x_gmean=gmean,
    )


def log_bin(x, y, n_bins: int = 40) -> BinnedCurve:
    """Average y over n_bins equal-width bins in log10(x).

    Edges span [min(x), max(x)]; the top edge is inclusive.  All x must be
    positive.  Empty input gives an empty curve.
    """
    if n_bins < 1:
        raise ParameterError("n_bins must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        empty = np.array([])
        return BinnedCurve(empty, empty, empty, empty.astype(np.int64), empty, empty)
    if np.any(x <= 0):
        raise DataError("log binning requires positive x")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        # all mass at one point: a single degenerate bin
        edges = np.array([lo, hi])
        centers = np.array([lo])
        return _aggregate(x, y, np.zeros(x.size, dtype=np.int64), 1, edges, centers)
    edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
    edges[0], edges[-1] = lo, hi
    centers = np.sqrt(edges[:-1] * edges[1:])
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    return _aggregate(x, y, idx, n_bins, edges, centers)


def bin_with_edges(x, y, edges: np.ndarray) -> BinnedCurve:
    """Aggregate onto caller-supplied log-style edges (top edge inclusive)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    edges = np.asarray(edges, dtype=float)
    n_bins = edges.size - 1
    centers = np.sqrt(edges[:-1] * edges[1:])
    if x.size == 0:
        nan = np.full(n_bins, np.nan)
        return BinnedCurve(edges, centers, nan, np.zeros(n_bins, dtype=np.int64), nan.copy(), nan.copy())
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    return _aggregate(x, y, idx, n_bins, edges, centers)


def linear_bin(x, y, n_bins: int, lo: float, hi: float) -> BinnedCurve:
    """Average y over equal-width bins on [lo, hi]; x outside is clamped."""
    if n_bins < 1:
        raise ParameterError("n_bins must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    edges = np.linspace(lo, hi, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    if x.size == 0:
        nan = np.full(n_bins, np.nan)
        return BinnedCurve(edges, centers, nan, np.zeros(n_bins, dtype=np.int64), nan.copy(), nan.copy())
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1)
    safe_x = np.where(x > 0, x, 1.0)  # gmean is meaningless for linear bins at x <= 0
    return _aggregate(safe_x, y, idx, n_bins, edges, centers)
