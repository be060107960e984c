"""Finite-alphabet distributions, KL divergence, the tilted family, and LLR statistics.

All logarithms are natural; divergences and log-likelihood ratios are in nats.
The KL conventions are 0*log(a/0) = 0 and b*log(b/0) = +inf for b > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

SUM_TOL = 1e-12


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on the symbols 0..m-1.

    Entries must be nonnegative and sum to 1 within 1e-12; the constructor
    renormalizes the residual rather than rejecting it.  Use :func:`make_pmf`
    to build one from an unnormalized vector.
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) < 2:
            raise ValueError("a pmf needs at least 2 symbols")
        if any(not math.isfinite(p) or p < 0.0 for p in self.probs):
            raise ValueError("pmf entries must be finite and nonnegative")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(
                f"pmf entries sum to {total!r}, not 1 within {SUM_TOL}; "
                "use make_pmf to normalize raw weights"
            )
        if total != 1.0:
            object.__setattr__(self, "probs", tuple(p / total for p in self.probs))

    @property
    def m(self) -> int:
        return len(self.probs)


def make_pmf(raw: Sequence[float]) -> Pmf:
    """Normalize a raw nonnegative weight vector into a Pmf.

    Exact zeros are preserved as zeros.
    """
    if len(raw) < 2:
        raise ValueError("need at least 2 weights")
    if any(not math.isfinite(w) or w < 0.0 for w in raw):
        raise ValueError("weights must be finite and nonnegative")
    total = math.fsum(raw)
    if total <= 0.0:
        raise ValueError("weights must not all be zero")
    return Pmf(tuple(w / total for w in raw))


def bernoulli(p: float) -> Pmf:
    """Two-symbol pmf with P(X=1) = p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return Pmf((1.0 - p, p))


@dataclass(frozen=True)
class HypothesisPair:
    """A pair of hypotheses (P1, P2) on a shared alphabet, with cached LLRs.

    llr[x] = log(P1(x)/P2(x)); +inf where only P2 vanishes, -inf where only
    P1 vanishes.  Symbols carrying zero mass under both hypotheses are
    removed at construction so the tilted normalizer is always positive.
    """

    p1: Pmf
    p2: Pmf
    llr: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.p1.m != self.p2.m:
            raise ValueError("hypotheses must share an alphabet size")
        keep = [
            x
            for x in range(self.p1.m)
            if self.p1.probs[x] > 0.0 or self.p2.probs[x] > 0.0
        ]
        if len(keep) < 2:
            raise ValueError("fewer than 2 jointly supported symbols")
        if len(keep) < self.p1.m:
            object.__setattr__(self, "p1", Pmf(tuple(self.p1.probs[x] for x in keep)))
            object.__setattr__(self, "p2", Pmf(tuple(self.p2.probs[x] for x in keep)))
        llr = []
        for a, b in zip(self.p1.probs, self.p2.probs):
            if b == 0.0:
                llr.append(math.inf)
            elif a == 0.0:
                llr.append(-math.inf)
            else:
                llr.append(math.log(a / b))
        object.__setattr__(self, "llr", tuple(llr))

    @property
    def m(self) -> int:
        return self.p1.m

    @property
    def has_infinite_llr(self) -> bool:
        return any(math.isinf(v) for v in self.llr)


def kl(p: Pmf, q: Pmf) -> float:
    """KL divergence D(p || q) in nats, +inf where q lacks mass p carries."""
    if p.m != q.m:
        raise ValueError("alphabet sizes differ")
    total = 0.0
    for a, b in zip(p.probs, q.probs):
        if a == 0.0:
            continue  # 0*log(a/0) = 0
        if b == 0.0:
            return math.inf  # b*log(b/0) = +inf
        total += a * math.log(a / b)
    # rounding can push a true zero a few ulps negative
    return total if total > 0.0 else 0.0


def tilt(pair: HypothesisPair, lam: float) -> Pmf:
    """The geometric interpolation P1^(1-lam) P2^lam / Z, computed in log space.

    lam=0 returns P1 exactly and lam=1 returns P2 exactly (0^0 = 1), even
    where the other hypothesis has no support.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    if lam == 0.0:
        return pair.p1
    if lam == 1.0:
        return pair.p2
    logw = [
        (1.0 - lam) * math.log(a) + lam * math.log(b) if a > 0.0 and b > 0.0 else -math.inf
        for a, b in zip(pair.p1.probs, pair.p2.probs)
    ]
    peak = max(logw)
    if peak == -math.inf:
        raise ValueError("supports are disjoint: tilted normalizer is zero")
    logz = peak + math.log(math.fsum(math.exp(w - peak) for w in logw))
    return Pmf(tuple(math.exp(w - logz) if w > -math.inf else 0.0 for w in logw))


def llr_statistic(counts: Sequence[int], llr: Sequence[float]) -> float:
    """Sum of counts[x]*llr[x], accumulated in ascending symbol order.

    This is the one statistic kernel shared by the runnable procedures and
    the exact enumeration oracle, so threshold ties resolve identically in
    both.  Opposite infinite contributions mean the observed counts are
    impossible under both hypotheses and raise.
    """
    pos = neg = False
    total = 0.0
    for c, v in zip(counts, llr):
        if c == 0:
            continue
        if v == math.inf:
            pos = True
        elif v == -math.inf:
            neg = True
        else:
            total += c * v
    if pos and neg:
        raise ValueError("sample is impossible under both hypotheses")
    if pos:
        return math.inf
    if neg:
        return -math.inf
    return total


def count_symbols(pair: HypothesisPair, samples: Iterable[int]) -> list[int]:
    """Tally symbol occurrences, rejecting ids outside the alphabet."""
    counts = [0] * pair.m
    for x in samples:
        if not 0 <= x < pair.m:
            raise ValueError(f"symbol id {x} outside alphabet of size {pair.m}")
        counts[x] += 1
    return counts


def llr_sum(pair: HypothesisPair, samples: Iterable[int]) -> float:
    """Unnormalized sum of per-sample LLRs over a sample sequence (nats)."""
    return llr_statistic(count_symbols(pair, samples), pair.llr)
