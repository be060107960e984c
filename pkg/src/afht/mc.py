"""Reproducible Monte Carlo engine for the decision procedures.

Trials are processed in fixed blocks of 8192.  The symbols consumed by a
trial are a pure function of (master_seed, hypothesis tag, trial index):
block b under hypothesis h draws from a generator seeded with the entropy
triple [master_seed, h, b], and trial t lives at row t % 8192 of block
t // 8192.  All per-block results are integer counters, so any worker
count or scheduling order reduces to bit-identical reports.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exact import exponent_fit, FitResult
from .exponents import TwoPhaseDesign
from .pmf import HypothesisPair
from .procedures import (
    FixedTest,
    RejectionTest,
    SprtTest,
    TestSpec,
    TwoPhaseTest,
)

BLOCK = 8192
SPRT_CHUNK = 64
WILSON_Z = 1.959963984540054  # 97.5% normal quantile
_LLR_CAP = 1e300  # stands in for +/-inf in vectorized sums


@dataclass(frozen=True)
class SeedSpec:
    """Master seed from which every trial substream is derived."""

    master_seed: int

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")

    def block_rng(self, hypothesis: int, block: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.master_seed, hypothesis, block])
        )


@dataclass(frozen=True)
class SimReport:
    trials: int
    decisions: dict[str, int]
    err_estimate: float
    err_ci_low: float
    err_ci_high: float
    tau_mean: float
    tau_var: float
    tau_scaled_moments: dict[int, float]
    truncated_count: int


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval; a zero count gets the rule-of-three bound."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if successes == 0:
        return 0.0, min(1.0, 3.0 / trials)
    z2 = WILSON_Z * WILSON_Z
    phat = successes / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = (
        WILSON_Z
        * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials))
        / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


def _truth_cdf(pair: HypothesisPair, truth: int) -> np.ndarray:
    probs = pair.p1.probs if truth == 1 else pair.p2.probs
    return np.cumsum(np.asarray(probs, dtype=np.float64))


def _capped_llr(pair: HypothesisPair) -> np.ndarray:
    llr = np.asarray(pair.llr, dtype=np.float64)
    llr[llr == np.inf] = _LLR_CAP
    llr[llr == -np.inf] = -_LLR_CAP
    return llr


def _symbols(rng: np.random.Generator, count: int, length: int, cdf: np.ndarray):
    u = rng.random((count, length))
    sym = np.searchsorted(cdf, u, side="right")
    return np.minimum(sym, len(cdf) - 1)


def trial_symbols(
    pair: HypothesisPair, truth: int, seed: SeedSpec, trials: int, length: int
) -> np.ndarray:
    """Materialize the first `length` symbols of each trial's substream.

    This is the published stream contract: fixed-length, rejection, and
    two-phase kernels consume exactly these rows.  (The SPRT kernel draws
    the same generator in step chunks of SPRT_CHUNK, so its rows match
    only while the horizon is within one chunk.)
    """
    cdf = _truth_cdf(pair, truth)
    rows = []
    for block in range(_nblocks(trials)):
        count = min(BLOCK, trials - block * BLOCK)
        rows.append(_symbols(seed.block_rng(truth, block), count, length, cdf))
    return np.vstack(rows)


def _mean_llr(sym: np.ndarray, llr: np.ndarray, lo: int, hi: int) -> np.ndarray:
    # counts accumulated in ascending symbol order: same float arithmetic as
    # llr_statistic, so threshold ties agree with the exact oracle
    total = np.zeros(sym.shape[0])
    window = sym[:, lo:hi]
    for x in range(len(llr)):
        total += (window == x).sum(axis=1) * llr[x]
    return total / (hi - lo)


class _Counters:
    __slots__ = ("h1", "h2", "rej", "trunc", "tau_pows")

    def __init__(self, orders: Sequence[int]) -> None:
        self.h1 = 0
        self.h2 = 0
        self.rej = 0
        self.trunc = 0
        self.tau_pows = {l: 0 for l in orders}

    def merge(self, other: "_Counters") -> None:
        self.h1 += other.h1
        self.h2 += other.h2
        self.rej += other.rej
        self.trunc += other.trunc
        for l, v in other.tau_pows.items():
            self.tau_pows[l] += v

    def add_taus(self, tau: np.ndarray) -> None:
        for l in self.tau_pows:
            # int64 is ample for realistic horizons; exact fallback otherwise
            if tau.size and int(tau.max()) ** l * tau.size >= 2**62:
                self.tau_pows[l] += sum(int(t) ** l for t in tau)
            else:
                powered = tau.astype(np.int64) ** l
                self.tau_pows[l] += int(powered.sum(dtype=np.int64))


def _block_fixed(pair, truth, test, seed, block, count, orders) -> _Counters:
    sym = _symbols(seed.block_rng(truth, block), count, test.n, _truth_cdf(pair, truth))
    stat = _mean_llr(sym, _capped_llr(pair), 0, test.n)
    c = _Counters(orders)
    c.h1 = int((stat >= test.alpha).sum())
    c.h2 = count - c.h1
    c.add_taus(np.full(count, test.n, dtype=np.int64))
    return c


def _block_rejection(pair, truth, test, seed, block, count, orders) -> _Counters:
    sym = _symbols(seed.block_rng(truth, block), count, test.n, _truth_cdf(pair, truth))
    stat = _mean_llr(sym, _capped_llr(pair), 0, test.n)
    upper = stat >= test.alpha
    lower = (~upper) & (stat <= test.beta)
    c = _Counters(orders)
    c.h1 = int(upper.sum())
    c.h2 = int(lower.sum())
    c.rej = count - c.h1 - c.h2
    c.add_taus(np.full(count, test.n, dtype=np.int64))
    return c


def _block_two_phase(pair, truth, test, seed, block, count, orders) -> _Counters:
    design: TwoPhaseDesign = test.design
    n, k = test.n, design.k
    length = (k + 1) * n
    sym = _symbols(seed.block_rng(truth, block), count, length, _truth_cdf(pair, truth))
    llr = _capped_llr(pair)
    stat1 = _mean_llr(sym, llr, 0, n)
    upper = stat1 >= design.alpha1
    lower = (~upper) & (stat1 <= design.beta1)
    band = ~(upper | lower)
    c = _Counters(orders)
    c.h1 = int(upper.sum())
    c.h2 = int(lower.sum())
    if band.any():
        stat2 = _mean_llr(sym[band], llr, n, length)
        second_h1 = int((stat2 >= design.alpha2).sum())
        c.h1 += second_h1
        c.h2 += int(band.sum()) - second_h1
    tau = np.where(band, (k + 1) * n, n).astype(np.int64)
    c.add_taus(tau)
    return c


def _block_sprt(pair, truth, test, seed, block, count, orders) -> _Counters:
    cfg = test.config
    a, b = cfg.thresholds(pair)
    rng = seed.block_rng(truth, block)
    cdf = _truth_cdf(pair, truth)
    llr = _capped_llr(pair)
    total = np.zeros(count)
    alive = np.ones(count, dtype=bool)
    decision_h1 = np.zeros(count, dtype=bool)
    tau = np.full(count, cfg.max_samples, dtype=np.int64)
    steps = 0
    while steps < cfg.max_samples and alive.any():
        chunk = min(SPRT_CHUNK, cfg.max_samples - steps)
        sym = _symbols(rng, count, chunk, cdf)
        cum = total[:, None] + np.cumsum(llr[sym], axis=1)
        up = cum >= a
        dn = cum <= b
        hit = up | dn
        hit_now = hit.any(axis=1) & alive
        first = np.argmax(hit, axis=1)
        rows = np.nonzero(hit_now)[0]
        decision_h1[rows] = up[rows, first[rows]]
        tau[rows] = steps + first[rows] + 1
        alive &= ~hit_now
        total = cum[:, -1]
        steps += chunk
    # horizon mass: sign rule, ties to H1
    decision_h1[alive] = total[alive] >= 0.0
    c = _Counters(orders)
    c.h1 = int(decision_h1.sum())
    c.h2 = count - c.h1
    c.trunc = int(alive.sum())
    c.add_taus(tau)
    return c


_KERNELS: dict[type, Callable[..., _Counters]] = {
    FixedTest: _block_fixed,
    RejectionTest: _block_rejection,
    TwoPhaseTest: _block_two_phase,
    SprtTest: _block_sprt,
}


def _nblocks(trials: int) -> int:
    return (trials + BLOCK - 1) // BLOCK


def test_budget_n(test: TestSpec) -> int:
    """The per-trial sample budget n that scales stopping-time moments."""
    if isinstance(test, SprtTest):
        return test.config.n
    return test.n


def simulate(
    pair: HypothesisPair,
    truth: int,
    test: TestSpec,
    trials: int,
    seed: SeedSpec,
    moment_orders: Sequence[int] = (),
    workers: int = 1,
) -> SimReport:
    """Run `trials` independent executions of a test under the given truth.

    err_estimate counts decisions for the opposite hypothesis (rejections
    are tallied separately, not as errors) with a 95% Wilson interval.
    Identical (seed, config) inputs give bit-identical reports at any
    worker count: every accumulated quantity is an integer counter.
    """
    if truth not in (1, 2):
        raise ValueError("truth must be 1 or 2")
    if trials < 1:
        raise ValueError("trials must be positive")
    if workers < 1:
        raise ValueError("workers must be positive")
    kernel = _KERNELS[type(test)]
    orders = sorted({1, 2, *moment_orders})

    def run_block(block: int) -> _Counters:
        count = min(BLOCK, trials - block * BLOCK)
        return kernel(pair, truth, test, seed, block, count, orders)

    blocks = range(_nblocks(trials))
    if workers == 1:
        results = [run_block(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, blocks))
    total = _Counters(orders)
    for c in results:
        total.merge(c)

    n = test_budget_n(test)
    errors = total.h2 if truth == 1 else total.h1
    ci_low, ci_high = wilson_interval(errors, trials)
    mean = total.tau_pows[1] / trials
    var = total.tau_pows[2] / trials - mean * mean
    return SimReport(
        trials=trials,
        decisions={
            "choose_h1": total.h1,
            "choose_h2": total.h2,
            "reject_both": total.rej,
        },
        err_estimate=errors / trials,
        err_ci_low=ci_low,
        err_ci_high=ci_high,
        tau_mean=mean,
        tau_var=max(var, 0.0),
        tau_scaled_moments={
            l: total.tau_pows[l] / (trials * n**l) for l in orders
        },
        truncated_count=total.trunc,
    )


@dataclass(frozen=True)
class SweepResult:
    entries: tuple[tuple[int, SimReport], ...]
    fit: FitResult
    skipped_n: tuple[int, ...]


def _check_n_values(n_values: Sequence[int]) -> None:
    if len(n_values) < 3:
        raise ValueError("need at least 3 n values")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n values must be strictly increasing")


def sweep(
    pair: HypothesisPair,
    truth: int,
    test_family: Callable[[int], TestSpec],
    n_values: Sequence[int],
    trials: int,
    seed: SeedSpec,
    workers: int = 1,
) -> SweepResult:
    """Simulate a test family over a grid of n and fit the error exponent.

    n values whose estimate is zero are unresolvable at this trial budget;
    they are flagged and skipped by the fit.  All-zero estimates raise.
    """
    _check_n_values(n_values)
    entries = []
    for n in n_values:
        entries.append((n, simulate(pair, truth, test_family(n), trials, seed, workers=workers)))
    fit_points = [(n, r.err_estimate) for n, r in entries if r.err_estimate > 0.0]
    skipped = tuple(n for n, r in entries if r.err_estimate == 0.0)
    if len(fit_points) < 2:
        raise ValueError(
            "fewer than two nonzero error estimates: exponent unresolvable "
            "at this trial budget"
        )
    return SweepResult(tuple(entries), exponent_fit(fit_points), skipped)


@dataclass(frozen=True)
class MomentRow:
    hypothesis: int
    n: int
    order: int
    scaled_moment: float  # E[(tau/n)^order]
    var_over_n2: float  # Var(tau)/n^2


@dataclass(frozen=True)
class MomentReport:
    rows: tuple[MomentRow, ...]
    tau_var: dict[int, dict[int, float]]  # hypothesis -> {n: Var(tau)}
    var_decreasing: dict[int, bool]


def moment_check(
    pair: HypothesisPair,
    design: TwoPhaseDesign,
    n_values: Sequence[int],
    trials: int,
    seed: SeedSpec,
    orders: Sequence[int] = (1, 2, 3),
    workers: int = 1,
) -> MomentReport:
    """Scaled stopping-time moments of the two-phase test across n.

    Var(tau) is required to decrease across consecutive n once
    n*gamma > 2*log(k*n) (before that, the k^2 n^2 factor can still beat
    the e^-gamma*n continuation decay).
    """
    _check_n_values(n_values)
    rows = []
    tau_var: dict[int, dict[int, float]] = {1: {}, 2: {}}
    for hyp in (1, 2):
        for n in n_values:
            report = simulate(
                pair, hyp, TwoPhaseTest(n, design), trials, seed,
                moment_orders=orders, workers=workers,
            )
            tau_var[hyp][n] = report.tau_var
            for l in sorted(set(orders)):
                rows.append(
                    MomentRow(
                        hyp, n, l,
                        report.tau_scaled_moments[l],
                        report.tau_var / (n * n),
                    )
                )
    var_decreasing = {}
    for hyp in (1, 2):
        qualifying = [
            n for n in n_values if n * design.gamma > 2.0 * math.log(design.k * n)
        ]
        var_decreasing[hyp] = all(
            tau_var[hyp][b] <= tau_var[hyp][a]
            for a, b in zip(qualifying, qualifying[1:])
        )
    return MomentReport(tuple(rows), tau_var, var_decreasing)
