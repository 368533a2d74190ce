"""Order-splitting inference: sign memory, run lengths, and the
gamma = alpha - 1 comparison.

The trade-sign autocorrelation is computed at the market level (all
traders pooled); the metaorder-length exponent alpha is fitted on the
run lengths of traders classified as order-splitters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DataError, InsufficientDataError, ParameterError

__all__ = [
    "AcfEstimate",
    "GammaFit",
    "PowerLawFit",
    "acf",
    "fit_gamma",
    "default_tau_range",
    "run_lengths",
    "sign_runs",
    "classify_traders",
    "fit_alpha",
    "lmf_compare",
]


@dataclass
class AcfEstimate:
    lags: np.ndarray  # 1..tau_max
    values: np.ndarray  # C(tau) with divisor N - tau
    n_signs: int
    centered: bool = False


@dataclass
class GammaFit:
    gamma: float
    half_width: float
    tau_min: int
    tau_max: int
    r_squared: float
    n_lags: int


@dataclass
class PowerLawFit:
    alpha_pdf: float  # density exponent a of P(L) ~ L^-a
    alpha_lmf: float  # a - 1, the metaorder-length tail exponent
    x_min: int
    ks_distance: float
    n_tail: int
    std_err: float
    thin_tail: bool = False  # fewer than 50 samples beyond the chosen cutoff


def acf(signs, tau_max: int, centered: bool = False) -> AcfEstimate:
    """Sample sign autocorrelation C(tau) = sum(e_l e_{l+tau}) / (N - tau).

    The default follows the plain estimator with no mean subtraction;
    ``centered=True`` switches to the mean-subtracted, variance-normalised
    variant.  Sums of +-1 products are exact in float64, so small hand
    cases come out exact.
    """
    s = np.asarray(signs, dtype=np.float64)
    n = s.size
    if tau_max >= n - 1:
        raise ParameterError(f"tau_max={tau_max} too large for {n} signs")
    if tau_max < 1:
        raise ParameterError("tau_max must be >= 1")
    if centered:
        s = s - s.mean()
        denom0 = float(s @ s) / n
        if denom0 == 0.0:
            raise DataError("zero variance sign sequence")
    values = np.empty(tau_max)
    for tau in range(1, tau_max + 1):
        values[tau - 1] = float(s[:-tau] @ s[tau:]) / (n - tau)
    if centered:
        values /= denom0
    return AcfEstimate(
        lags=np.arange(1, tau_max + 1), values=values, n_signs=n, centered=centered
    )


def default_tau_range(n_signs: int) -> tuple[int, int]:
    """Fit window skipping microstructure lags and the noise-dominated tail."""
    return 10, max(11, min(1000, n_signs // 20))


def fit_gamma(
    estimate: AcfEstimate, tau_min: int | None = None, tau_max: int | None = None
) -> GammaFit:
    """Power-law decay exponent from OLS of ln C(tau) on ln tau.

    Uses only lags with positive C(tau); requires at least 10 of them in
    the window.  gamma is minus the slope; the half-width is the 95% Wald
    interval of the slope.
    """
    lo, hi = default_tau_range(estimate.n_signs)
    tau_min = lo if tau_min is None else tau_min
    tau_max = hi if tau_max is None else tau_max
    if tau_min >= tau_max:
        raise ParameterError("need tau_min < tau_max")
    mask = (
        (estimate.lags >= tau_min)
        & (estimate.lags <= tau_max)
        & (estimate.values > 0)
    )
    n = int(mask.sum())
    if n < 10:
        raise InsufficientDataError(
            f"only {n} lags with positive autocorrelation in [{tau_min}, {tau_max}]"
        )
    lx = np.log(estimate.lags[mask].astype(float))
    ly = np.log(estimate.values[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    if n > 2:
        se = math.sqrt(float(resid @ resid) / (n - 2) / sxx)
    else:
        se = 0.0
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return GammaFit(
        gamma=float(-slope),
        half_width=1.96 * se,
        tau_min=tau_min,
        tau_max=tau_max,
        r_squared=r2,
        n_lags=n,
    )


def sign_runs(signs) -> list[tuple[int, int]]:
    """(sign, length) of each maximal same-sign run, in order."""
    runs: list[tuple[int, int]] = []
    current_sign = None
    length = 0
    for s in signs:
        if s == current_sign:
            length += 1
        else:
            if current_sign is not None:
                runs.append((current_sign, length))
            current_sign, length = s, 1
    if current_sign is not None:
        runs.append((current_sign, length))
    return runs


def run_lengths(signs) -> np.ndarray:
    """Lengths of maximal same-sign runs, length-1 runs included."""
    return np.array([length for _, length in sign_runs(signs)], dtype=np.int64)


def classify_traders(
    sequences: dict[int, np.ndarray],
    level: float = 0.01,
    min_orders: int = 30,
    imbalance_guard: float = 0.9,
) -> dict[int, str]:
    """Label each trader "ST" (order-splitter) or "RT" (random).

    A trader is an ST when a two-sided binomial test on its count of
    consecutive equal-sign pairs rejects independence at ``level`` with an
    excess of continuations.  The null continuation probability comes from
    the trader's own sign balance; heavily one-sided traders (balance guard)
    are STs outright since the test degenerates there.  Traders with fewer
    than ``min_orders`` orders are left out of the output.
    """
    labels: dict[int, str] = {}
    for trader, signs in sequences.items():
        s = np.asarray(signs)
        n = s.size
        if n < min_orders:
            continue
        balance = float(s.mean())
        if abs(balance) > imbalance_guard:
            labels[trader] = "ST"
            continue
        p_plus = (balance + 1.0) / 2.0
        rho = p_plus**2 + (1.0 - p_plus) ** 2
        continuations = int(np.sum(s[1:] == s[:-1]))
        test = stats.binomtest(continuations, n - 1, rho, alternative="two-sided")
        excess = continuations > (n - 1) * rho
        labels[trader] = "ST" if (test.pvalue < level and excess) else "RT"
    return labels


def _discrete_powerlaw_sf(values: np.ndarray, a: float, x_min: int) -> np.ndarray:
    """P(X >= v) for the zeta power law on {x_min, x_min+1, ...}."""
    return special.zeta(a, values) / special.zeta(a, x_min)


def _discrete_mle(tail: np.ndarray, x_min: int) -> float:
    """Exact discrete MLE of the density exponent on the tail sample.

    Maximises -a * mean(ln L) - ln zeta(a, x_min); the shifted-log
    closed form seeds the search.
    """
    mean_log = float(np.mean(np.log(tail)))
    seed = 1.0 + 1.0 / max(mean_log - math.log(x_min - 0.5), 1e-9)
    lo, hi = 1.000001, max(seed * 3.0, 6.0)

    def neg_loglik(a: float) -> float:
        return a * mean_log + math.log(special.zeta(a, x_min))

    res = _golden_min(neg_loglik, lo, hi)
    return res


def _golden_min(fn, lo: float, hi: float, tol: float = 1e-8) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def fit_alpha(lengths, x_min_floor: int = 2, min_tail: int = 50) -> PowerLawFit:
    """Clauset-style tail fit of P(L) ~ L^-a with KS-chosen lower cutoff.

    For every candidate cutoff (observed values between ``x_min_floor`` and
    the 90th percentile) the exponent is estimated by exact discrete MLE
    and scored by the KS distance between the empirical tail CDF and the
    fitted zeta law; the smallest distance wins.  ``alpha_lmf`` is a - 1,
    the exponent of the metaorder-length survival law.
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.size < min_tail:
        raise InsufficientDataError(f"need >= {min_tail} run lengths, got {lengths.size}")
    if np.all(lengths == lengths[0]):
        raise DataError("degenerate run-length sample: all values identical")
    cap = np.quantile(lengths, 0.9)
    candidates = np.unique(lengths)
    candidates = candidates[(candidates >= x_min_floor) & (candidates <= cap)]
    if candidates.size == 0:
        candidates = np.array([max(x_min_floor, int(lengths.min()))], dtype=np.int64)

    sorted_lengths = np.sort(lengths)
    best: tuple[float, int, float, int] | None = None
    for x_min in candidates:
        x_min = int(x_min)
        start = np.searchsorted(sorted_lengths, x_min, side="left")
        tail = sorted_lengths[start:]
        if tail.size < 2 or tail[0] == tail[-1]:
            continue
        a_hat = _discrete_mle(tail, x_min)
        uniq, counts = np.unique(tail, return_counts=True)
        emp_cdf = np.cumsum(counts) / tail.size
        model_cdf = 1.0 - _discrete_powerlaw_sf(uniq + 1, a_hat, x_min)
        ks = float(np.max(np.abs(emp_cdf - model_cdf)))
        if best is None or ks < best[0]:
            best = (ks, x_min, a_hat, tail.size)
    if best is None:
        raise DataError("no usable cutoff candidate for the power-law fit")
    ks, x_min, a_hat, n_tail = best
    # observed-information standard error of the density exponent
    h = 1e-4
    tail = sorted_lengths[np.searchsorted(sorted_lengths, x_min, side="left") :]
    mean_log = float(np.mean(np.log(tail)))

    def nll(a: float) -> float:
        return n_tail * (a * mean_log + math.log(special.zeta(a, x_min)))

    second = (nll(a_hat + h) - 2.0 * nll(a_hat) + nll(a_hat - h)) / (h * h)
    std_err = 1.0 / math.sqrt(second) if second > 0 else float("inf")
    return PowerLawFit(
        alpha_pdf=a_hat,
        alpha_lmf=a_hat - 1.0,
        x_min=x_min,
        ks_distance=ks,
        n_tail=n_tail,
        std_err=std_err,
        thin_tail=n_tail < min_tail,
    )


@dataclass
class LmfComparison:
    rows: list[dict]  # stock, alpha_minus_1, gamma, abs_dev
    bin_centers: np.ndarray
    bin_median_gamma: np.ndarray
    median_abs_dev: float
    dropped: list[str]


def lmf_compare(
    alpha_fits: dict[str, PowerLawFit],
    gamma_fits: dict[str, GammaFit],
    n_bins: int = 8,
) -> LmfComparison:
    """Per-stock (alpha - 1, gamma) table with binned medians.

    Unpaired stocks are dropped (and listed).  The summary statistic is the
    median absolute deviation of gamma from the identity line
    gamma = alpha - 1.
    """
    keys = sorted(set(alpha_fits) & set(gamma_fits))
    dropped = sorted(set(alpha_fits) ^ set(gamma_fits))
    rows = []
    for key in keys:
        a1 = alpha_fits[key].alpha_lmf - 1.0  # LMF identity line: gamma = alpha - 1
        g = gamma_fits[key].gamma
        rows.append(
            {"stock": key, "alpha_minus_1": a1, "gamma": g, "abs_dev": abs(g - a1)}
        )
    if not rows:
        return LmfComparison(rows, np.array([]), np.array([]), float("nan"), dropped)
    a1s = np.array([r["alpha_minus_1"] for r in rows])
    gs = np.array([r["gamma"] for r in rows])
    lo, hi = float(a1s.min()), float(a1s.max())
    if lo == hi:
        centers = np.array([lo])
        medians = np.array([float(np.median(gs))])
    else:
        edges = np.linspace(lo, hi, n_bins + 1)
        idx = np.clip(np.searchsorted(edges, a1s, side="right") - 1, 0, n_bins - 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        medians = np.full(n_bins, np.nan)
        for b in range(n_bins):
            sel = gs[idx == b]
            if sel.size:
                medians[b] = float(np.median(sel))
    return LmfComparison(
        rows=rows,
        bin_centers=centers,
        bin_median_gamma=medians,
        median_abs_dev=float(np.median(np.abs(gs - (a1s)))),
        dropped=dropped,
    )
