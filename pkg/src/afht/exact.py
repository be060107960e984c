"""Exact error, continuation, and rejection probabilities via type-class
enumeration, an LLR-lattice dynamic program for the truncated SPRT, and
least-squares exponent extraction.

Every probability is assembled in log space (multinomial log-weights from a
log-factorial table, log-sum-exp accumulation) so values as small as e^-700
come out exact.  Decision buckets reuse classify_llr and llr_statistic, so
tie handling is bit-identical to the runnable procedures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .exponents import TwoPhaseDesign
from .pmf import HypothesisPair, llr_statistic
from .procedures import SprtConfig, classify_llr, truncation_decision

ENUM_GUARD = 10_000_000
SPRT_LATTICE = 1e-9


class GuardExceeded(RuntimeError):
    """The requested exact computation exceeds the state-space guard."""


@dataclass(frozen=True)
class ErrorReport:
    """Probabilities of each outcome under each hypothesis.

    p1_err = P1(choose H2) and p2_err = P2(choose H1); continuation fields
    apply to the two-phase test, rejection fields to the rejection test,
    and are zero elsewhere.
    """

    p1_err: float
    p2_err: float
    p1_continue: float = 0.0
    p2_continue: float = 0.0
    p1_reject: float = 0.0
    p2_reject: float = 0.0


def _compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    if m == 1:
        yield (n,)
        return
    for c in range(n + 1):
        for rest in _compositions(n - c, m - 1):
            yield (c,) + rest


def _check_enum_guard(n: int, m: int) -> None:
    count = math.comb(n + m - 1, m - 1)
    if count > ENUM_GUARD:
        raise GuardExceeded(
            f"{count} type classes for n={n}, m={m} exceed the guard of {ENUM_GUARD}"
        )


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


class _BucketSums:
    """Running log-space totals for (region, hypothesis) buckets."""

    def __init__(self) -> None:
        self.logs = {
            (region, hyp): -math.inf
            for region in ("upper", "lower", "middle")
            for hyp in (1, 2)
        }

    def add(self, region: str, hyp: int, logp: float) -> None:
        if logp > -math.inf:
            self.logs[(region, hyp)] = _logaddexp(self.logs[(region, hyp)], logp)

    def prob(self, region: str, hyp: int) -> float:
        return math.exp(self.logs[(region, hyp)])


def _bucket_probs(
    pair: HypothesisPair, n: int, alpha: float, beta: float
) -> _BucketSums:
    """Sum exact multinomial masses of every length-n type class into the
    upper/lower/middle buckets of the normalized-LLR band (alpha, beta)."""
    _check_enum_guard(n, pair.m)
    lf = [math.lgamma(i + 1) for i in range(n + 1)]
    logp1 = [math.log(p) if p > 0.0 else -math.inf for p in pair.p1.probs]
    logp2 = [math.log(p) if p > 0.0 else -math.inf for p in pair.p2.probs]
    sums = _BucketSums()
    for counts in _compositions(n, pair.m):
        lw1 = lw2 = lf[n]
        for c, l1, l2 in zip(counts, logp1, logp2):
            if c == 0:
                continue
            lw1 += c * l1 - lf[c] if l1 > -math.inf else -math.inf
            lw2 += c * l2 - lf[c] if l2 > -math.inf else -math.inf
        if lw1 == -math.inf and lw2 == -math.inf:
            continue  # impossible under both hypotheses
        stat = llr_statistic(counts, pair.llr) / n
        region = classify_llr(stat, alpha, beta)
        sums.add(region, 1, lw1)
        sums.add(region, 2, lw2)
    return sums


def exact_fixed(pair: HypothesisPair, n: int, alpha: float) -> ErrorReport:
    """Exact error probabilities of the fixed-length test at threshold alpha."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    sums = _bucket_probs(pair, n, alpha, alpha)
    return ErrorReport(p1_err=sums.prob("lower", 1), p2_err=sums.prob("upper", 2))


def exact_rejection(
    pair: HypothesisPair, n: int, alpha: float, beta: float
) -> ErrorReport:
    """Exact outcome probabilities of the rejection-option test."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if alpha < beta:
        raise ValueError("alpha must be >= beta")
    sums = _bucket_probs(pair, n, alpha, beta)
    return ErrorReport(
        p1_err=sums.prob("lower", 1),
        p2_err=sums.prob("upper", 2),
        p1_reject=sums.prob("middle", 1),
        p2_reject=sums.prob("middle", 2),
    )


def exact_two_phase(
    pair: HypothesisPair, design: TwoPhaseDesign, n: int
) -> ErrorReport:
    """Exact error and continuation probabilities of the two-phase test.

    Phase II runs on fresh samples, so its conditional error factors out of
    the phase-I continuation mass: P1(choose H2) = P1(phase-I lower)
    + P1(band) * P1(phase-II below alpha2), and symmetrically under H2.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    phase1 = _bucket_probs(pair, n, design.alpha1, design.beta1)
    band1 = phase1.prob("middle", 1)
    band2 = phase1.prob("middle", 2)
    kn = design.k * n
    phase2 = _bucket_probs(pair, kn, design.alpha2, design.alpha2)
    return ErrorReport(
        p1_err=phase1.prob("lower", 1) + band1 * phase2.prob("lower", 1),
        p2_err=phase1.prob("upper", 2) + band2 * phase2.prob("upper", 2),
        p1_continue=band1,
        p2_continue=band2,
    )


def exact_sprt_truncated(pair: HypothesisPair, cfg: SprtConfig) -> ErrorReport:
    """Exact truncated-SPRT error probabilities by a forward dynamic program
    over (step, accumulated LLR).

    Accumulated sums are merged on a lattice of step 1e-9, which is exact
    whenever the per-symbol LLRs are commensurable at that resolution and
    otherwise a documented approximation knob.  Horizon mass is decided by
    the same sign rule as the runnable procedure.
    """
    a, b = cfg.thresholds(pair)

    def absorbed(probs: Sequence[float]) -> tuple[float, float]:
        up = dn = 0.0
        states: dict[int, float] = {0: 1.0}
        processed = 0
        for _ in range(cfg.max_samples):
            processed += len(states)
            if processed > ENUM_GUARD:
                raise GuardExceeded(
                    f"SPRT lattice walk exceeded {ENUM_GUARD} states"
                )
            nxt: dict[int, float] = {}
            for key, mass in states.items():
                base = key * SPRT_LATTICE
                for x, px in enumerate(probs):
                    if px == 0.0:
                        continue
                    total = base + pair.llr[x]
                    if total >= a:
                        up += mass * px
                    elif total <= b:
                        dn += mass * px
                    else:
                        nk = round(total / SPRT_LATTICE)
                        nxt[nk] = nxt.get(nk, 0.0) + mass * px
            states = nxt
            if not states:
                break
        for key, mass in states.items():
            if truncation_decision(key * SPRT_LATTICE) == "choose_h1":
                up += mass
            else:
                dn += mass
        return up, dn

    _, dn1 = absorbed(pair.p1.probs)
    up2, _ = absorbed(pair.p2.probs)
    return ErrorReport(p1_err=dn1, p2_err=up2)


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of -log(p) against n: slope is the exponent in
    nats/sample.  infinite marks a zero probability in the input."""

    slope: float
    intercept: float
    r2: float
    infinite: bool = False


def exponent_fit(points: Sequence[tuple[float, float]]) -> FitResult:
    """Fit -log(p) = slope*n + intercept over (n, p) pairs.

    A zero probability makes the empirical exponent infinite and is
    reported via the flag rather than raising; two points give the exact
    line through them.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points to fit an exponent")
    for _, p in points:
        if p < 0.0 or p > 1.0:
            raise ValueError(f"probability {p!r} outside [0, 1]")
    if any(p == 0.0 for _, p in points):
        return FitResult(math.inf, math.nan, math.nan, infinite=True)
    xs = [float(n) for n, _ in points]
    ys = [-math.log(p) for _, p in points]
    count = len(xs)
    mean_x = math.fsum(xs) / count
    mean_y = math.fsum(ys) / count
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    if sxx == 0.0:
        raise ValueError("all n values identical; slope is undefined")
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = math.fsum((y - mean_y) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(slope, intercept, r2)
