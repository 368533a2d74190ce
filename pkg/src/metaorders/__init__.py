"""Synthetic metaorder reconstruction from public trade data, stylised-fact
impact analytics, and order-splitting (LMF) inference with a simulator oracle.
"""

from .assignment import Assignment, ParticipationProfile, assign_trades, build_profile
from .binning import BinnedCurve, log_bin
from .engine import Metaorder, build_metaorders, child_impact_profile, metaorder_impact
from .fitting import FitResult, nls_fit
from .lmf import acf, classify_traders, fit_alpha, fit_gamma, lmf_compare, run_lengths
from .market_data import (
    DailyStats,
    TradeEvent,
    compute_daily_stats,
    parse_trades,
    rolling_stats,
)
from .pipeline import PipelineConfig, load_config, run_pipeline
from .simulator import SimConfig, SimOutput, simulate, true_run_check

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "BinnedCurve",
    "DailyStats",
    "FitResult",
    "Metaorder",
    "ParticipationProfile",
    "PipelineConfig",
    "SimConfig",
    "SimOutput",
    "TradeEvent",
    "acf",
    "assign_trades",
    "build_metaorders",
    "build_profile",
    "child_impact_profile",
    "classify_traders",
    "compute_daily_stats",
    "fit_alpha",
    "fit_gamma",
    "lmf_compare",
    "load_config",
    "log_bin",
    "metaorder_impact",
    "nls_fit",
    "parse_trades",
    "rolling_stats",
    "run_lengths",
    "run_pipeline",
    "simulate",
    "true_run_check",
]
