"""LMF order-splitting flow generator with known ground truth.

Each trader works through a queue of metaorders whose lengths follow the
discrete power law P(L) ~ L^-(alpha+1); every market step picks a trader
by participation weight and emits that trader's next child-order sign.
The recorded metaorders are the oracle against which the reconstruction
and inference pipeline is accepted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .assignment import sample_truncated_pareto
from .errors import OracleIntegrityError, ParameterError

__all__ = [
    "SimConfig",
    "SimOutput",
    "TrueMetaorder",
    "simulate",
    "true_run_check",
    "sample_discrete_powerlaw",
    "discrete_powerlaw_cdf",
]


@dataclass(frozen=True)
class SimConfig:
    alpha: float
    n_traders: int = 1
    n_orders: int = 100_000
    l_min: int = 2  # shortest metaorder; 2 keeps every true metaorder reconstructable
    l_cap: int = 100_000
    participation: str = "homogeneous"  # or "power_law"
    delta: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.alpha <= 1.0:
            raise ParameterError("alpha must be > 1")
        if self.l_min < 1 or self.l_cap < self.l_min:
            raise ParameterError("need 1 <= l_min <= l_cap")
        if self.n_orders < 1 or self.n_traders < 1:
            raise ParameterError("n_orders and n_traders must be >= 1")
        if self.participation not in ("homogeneous", "power_law"):
            raise ParameterError(f"unknown participation: {self.participation!r}")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


@dataclass(frozen=True)
class TrueMetaorder:
    trader: int  # 1-based
    start: int  # index of the first child in the global sign stream
    length: int  # emitted length (truncated ones record what was emitted)
    sign: int
    truncated: bool = False


@dataclass
class SimOutput:
    signs: np.ndarray
    trader_ids: np.ndarray  # 1-based, aligned with signs
    true_metaorders: list[TrueMetaorder]
    weights: np.ndarray
    config: SimConfig = field(repr=False, default=None)


def discrete_powerlaw_cdf(alpha: float, l_min: int, l_cap: int) -> np.ndarray:
    """CDF of P(L) ~ L^-(alpha+1) on the integers [l_min, l_cap]."""
    support = np.arange(l_min, l_cap + 1, dtype=np.float64)
    weights = support ** -(alpha + 1.0)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


def sample_discrete_powerlaw(
    rng: np.random.Generator, size: int, alpha: float, l_min: int, l_cap: int
) -> np.ndarray:
    """Exact inverse-CDF draws of metaorder lengths."""
    cdf = discrete_powerlaw_cdf(alpha, l_min, l_cap)
    u = rng.random(size)
    return (np.searchsorted(cdf, u, side="right") + l_min).astype(np.int64)


def simulate(config: SimConfig) -> SimOutput:
    """Generate a sign stream of length n_orders with recorded metaorders.

    Deterministic given the seed.  Trader picks and each trader's
    length/sign draws use independent substreams, so growing n_orders only
    appends draws and never perturbs earlier ones.
    """
    config.validate()
    root = np.random.SeedSequence(config.seed)
    pick_ss, part_ss, trader_root = root.spawn(3)
    trader_seeds = trader_root.spawn(config.n_traders)

    if config.participation == "homogeneous":
        weights = np.full(config.n_traders, 1.0 / config.n_traders)
    else:
        part_rng = np.random.Generator(np.random.Philox(part_ss))
        # fixed frequency bound: weights must not depend on n_orders, so that
        # growing the stream only appends draws
        freq = sample_truncated_pareto(part_rng, config.n_traders, config.delta, 1.0, 1e6)
        weights = freq / freq.sum()
    cum = np.cumsum(weights)
    cum[-1] = 1.0

    pick_rng = np.random.Generator(np.random.Philox(pick_ss))
    picks = np.minimum(
        np.searchsorted(cum, pick_rng.random(config.n_orders), side="right"),
        config.n_traders - 1,
    )

    signs = np.empty(config.n_orders, dtype=np.int8)
    metaorders: list[TrueMetaorder] = []
    cdf = discrete_powerlaw_cdf(config.alpha, config.l_min, config.l_cap)

    for j in range(config.n_traders):
        positions = np.nonzero(picks == j)[0]
        k = positions.size
        if k == 0:
            continue
        # separate length and sign streams: the i-th metaorder's draws are the
        # i-th values of each stream no matter how many orders the run emits,
        # so growing n_orders only appends metaorders
        length_ss, sign_ss = trader_seeds[j].spawn(2)
        length_rng = np.random.Generator(np.random.Philox(length_ss))
        sign_rng = np.random.Generator(np.random.Philox(sign_ss))
        lengths: list[int] = []
        meta_signs: list[int] = []
        covered = 0
        while covered < k:
            batch = max(16, int((k - covered) // max(config.l_min, 1)) + 1)
            u = length_rng.random(batch)
            draw = (np.searchsorted(cdf, u, side="right") + config.l_min).astype(np.int64)
            s = np.where(sign_rng.random(batch) < 0.5, 1, -1)
            for L, sg in zip(draw, s):
                lengths.append(int(L))
                meta_signs.append(int(sg))
                covered += int(L)
                if covered >= k:
                    break
        offset = 0
        for L, sg in zip(lengths, meta_signs):
            emitted = min(L, k - offset)
            metaorders.append(
                TrueMetaorder(
                    trader=j + 1,
                    start=int(positions[offset]),
                    length=emitted,
                    sign=sg,
                    truncated=emitted < L,
                )
            )
            signs[positions[offset : offset + emitted]] = sg
            offset += emitted
            if offset >= k:
                break

    metaorders.sort(key=lambda m: m.start)
    return SimOutput(
        signs=signs.astype(np.int64),
        trader_ids=(picks + 1).astype(np.int64),
        true_metaorders=metaorders,
        weights=weights,
        config=config,
    )


def true_run_check(output: SimOutput) -> dict:
    """Self-validate a simulation before trusting it as an oracle.

    Checks that the recorded metaorders tile each trader's trade sequence
    exactly with the recorded signs, and that completed metaorder lengths
    pass a KS test against the target power law.  Any mismatch raises
    OracleIntegrityError.
    """
    config = output.config
    n = output.signs.size
    if output.trader_ids.size != n:
        raise OracleIntegrityError("trader_ids misaligned with signs")

    next_expected: dict[int, int] = {}
    per_trader_positions: dict[int, np.ndarray] = {}
    for j in np.unique(output.trader_ids):
        per_trader_positions[int(j)] = np.nonzero(output.trader_ids == j)[0]
        next_expected[int(j)] = 0

    for m in output.true_metaorders:
        positions = per_trader_positions.get(m.trader)
        if positions is None:
            raise OracleIntegrityError(f"metaorder for unseen trader {m.trader}")
        cursor = next_expected[m.trader]
        block = positions[cursor : cursor + m.length]
        if block.size != m.length or block[0] != m.start:
            raise OracleIntegrityError(
                f"metaorder at {m.start} does not tile trader {m.trader}'s sequence"
            )
        if not np.all(output.signs[block] == m.sign):
            raise OracleIntegrityError(
                f"sign mismatch inside metaorder starting at {m.start}"
            )
        next_expected[m.trader] = cursor + m.length
    for j, positions in per_trader_positions.items():
        if next_expected[j] != positions.size:
            raise OracleIntegrityError(f"trader {j} has unrecorded trades")

    completed = np.array(
        [m.length for m in output.true_metaorders if not m.truncated], dtype=np.int64
    )
    report = {
        "n_orders": n,
        "n_metaorders": len(output.true_metaorders),
        "n_completed": int(completed.size),
        "ks_pvalue": None,
    }
    if completed.size >= 100:
        report["ks_pvalue"] = _ks_pvalue_against_target(completed, config)
        if report["ks_pvalue"] <= 0.01:
            raise OracleIntegrityError(
                f"completed lengths fail the distribution check (p={report['ks_pvalue']:.4g})"
            )
    return report


def _ks_pvalue_against_target(lengths: np.ndarray, config: SimConfig) -> float:
    uniq, counts = np.unique(lengths, return_counts=True)
    emp = np.cumsum(counts) / lengths.size
    cdf = discrete_powerlaw_cdf(config.alpha, config.l_min, config.l_cap)
    model = cdf[np.clip(uniq - config.l_min, 0, cdf.size - 1)]
    d = float(np.max(np.abs(emp - model)))
    # asymptotic Kolmogorov p-value; conservative for discrete support
    return float(special.kolmogorov(d * math.sqrt(lengths.size)))
