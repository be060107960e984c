"""Runnable decision procedures: fixed-length LRT, truncated SPRT, two-phase,
and rejection-option tests over pull-based symbol streams.

Threshold ties resolve the same way everywhere: at-or-above the upper
threshold chooses H1, at-or-below the lower chooses H2.  The exact
enumeration oracle shares these comparisons (see classify_llr).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal, Union

from .exponents import TwoPhaseDesign
from .pmf import HypothesisPair, kl, llr_sum

Decision = Literal["choose_h1", "choose_h2", "reject_both"]

CHOOSE_H1: Decision = "choose_h1"
CHOOSE_H2: Decision = "choose_h2"
REJECT_BOTH: Decision = "reject_both"


@dataclass(frozen=True)
class TestOutcome:
    decision: Decision
    tau: int
    truncated: bool = False


@dataclass(frozen=True)
class SprtConfig:
    """Wald test scaled to budget n: absorb above A = (KL21 - delta)*n or
    below B = -(KL12 - delta)*n, forcibly decided at max_samples."""

    n: int
    delta: float
    max_samples: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.max_samples < 1:
            raise ValueError("max_samples must be a positive integer")

    def thresholds(self, pair: HypothesisPair) -> tuple[float, float]:
        a = (kl(pair.p2, pair.p1) - self.delta) * self.n
        b = -(kl(pair.p1, pair.p2) - self.delta) * self.n
        if not a > 0.0 > b:
            raise ValueError("delta must be smaller than both KL divergences")
        return a, b


# Bulk-simulation configurations (consumed by the Monte Carlo engine).


@dataclass(frozen=True)
class FixedTest:
    n: int
    alpha: float


@dataclass(frozen=True)
class RejectionTest:
    n: int
    alpha: float
    beta: float


@dataclass(frozen=True)
class TwoPhaseTest:
    n: int
    design: TwoPhaseDesign


@dataclass(frozen=True)
class SprtTest:
    config: SprtConfig


TestSpec = Union[FixedTest, RejectionTest, TwoPhaseTest, SprtTest]


def classify_llr(stat: float, alpha: float, beta: float) -> str:
    """Place a normalized LLR against a threshold band: 'upper' (>= alpha),
    'lower' (<= beta), or 'middle'.  Checked in that order, so alpha == beta
    sends exact ties upward."""
    if stat >= alpha:
        return "upper"
    if stat <= beta:
        return "lower"
    return "middle"


def _take(stream: Iterator[int], count: int) -> list[int]:
    got = list(itertools.islice(stream, count))
    if len(got) < count:
        raise ValueError(f"stream exhausted: needed {count} symbols, got {len(got)}")
    return got


def run_fixed(
    pair: HypothesisPair, n: int, alpha: float, stream: Iterable[int]
) -> TestOutcome:
    """Fixed-length test: choose H1 iff the n-sample normalized LLR >= alpha."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    stat = llr_sum(pair, _take(iter(stream), n)) / n
    region = classify_llr(stat, alpha, alpha)
    return TestOutcome(CHOOSE_H1 if region == "upper" else CHOOSE_H2, n)


def run_rejection(
    pair: HypothesisPair, n: int, alpha: float, beta: float, stream: Iterable[int]
) -> TestOutcome:
    """Fixed-length test with a rejection band: the open band (beta, alpha)
    declines both hypotheses."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha < beta:
        raise ValueError("alpha must be >= beta")
    stat = llr_sum(pair, _take(iter(stream), n)) / n
    region = classify_llr(stat, alpha, beta)
    if region == "upper":
        return TestOutcome(CHOOSE_H1, n)
    if region == "lower":
        return TestOutcome(CHOOSE_H2, n)
    return TestOutcome(REJECT_BOTH, n)


def run_two_phase(
    pair: HypothesisPair, design: TwoPhaseDesign, n: int, stream: Iterable[int]
) -> TestOutcome:
    """Two-phase test: phase I thresholds the first n samples at
    (alpha1, beta1); the open band takes k*n extra samples and phase II
    decides on those fresh samples alone at alpha2."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    it = iter(stream)
    stat1 = llr_sum(pair, _take(it, n)) / n
    region = classify_llr(stat1, design.alpha1, design.beta1)
    if region == "upper":
        return TestOutcome(CHOOSE_H1, n)
    if region == "lower":
        return TestOutcome(CHOOSE_H2, n)
    kn = design.k * n
    stat2 = llr_sum(pair, _take(it, kn)) / kn
    phase2 = classify_llr(stat2, design.alpha2, design.alpha2)
    return TestOutcome(CHOOSE_H1 if phase2 == "upper" else CHOOSE_H2, (design.k + 1) * n)


def truncation_decision(total_llr: float) -> Decision:
    """Forced decision at the SPRT horizon: sign of the accumulated LLR,
    ties to H1."""
    return CHOOSE_H1 if total_llr >= 0.0 else CHOOSE_H2


def run_sprt(
    pair: HypothesisPair, cfg: SprtConfig, stream: Iterable[int]
) -> TestOutcome:
    """Truncated SPRT: accumulate per-sample LLRs until absorption at the
    Wald thresholds, else decide by sign at the horizon (truncated=True)."""
    a, b = cfg.thresholds(pair)
    total = 0.0
    tau = 0
    for x in itertools.islice(iter(stream), cfg.max_samples):
        if not 0 <= x < pair.m:
            raise ValueError(f"symbol id {x} outside alphabet of size {pair.m}")
        tau += 1
        v = pair.llr[x]
        if math.isinf(total) and math.isinf(v) and (total > 0.0) != (v > 0.0):
            raise ValueError("sample is impossible under both hypotheses")
        total = total + v
        if total >= a:
            return TestOutcome(CHOOSE_H1, tau)
        if total <= b:
            return TestOutcome(CHOOSE_H2, tau)
        if tau == cfg.max_samples:
            return TestOutcome(truncation_decision(total), tau, truncated=True)
    raise ValueError(
        f"stream exhausted after {tau} symbols before absorption or truncation"
    )
