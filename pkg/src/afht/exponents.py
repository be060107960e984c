"""Error-exponent geometry: the Chernoff point, feasible regions, and two-phase thresholds.

Exponents are in nats per sample.  Region boundaries are point lists in the
(type-I exponent, type-II exponent) plane; an "envelope" is the Pareto
frontier of a region under coordinatewise <=.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .pmf import HypothesisPair, kl, tilt

DEFAULT_TOL = 1e-10
DEFAULT_GRID = 512
_MAX_BISECT = 200

BOUNDARY_KINDS = ("fd_curve", "box_corner", "envelope")


@dataclass(frozen=True)
class ExponentPair:
    """A point (e1, e2) in the error-exponent plane, nats/sample."""

    e1: float
    e2: float

    def __post_init__(self) -> None:
        for v in (self.e1, self.e2):
            if not math.isfinite(v) or v < 0.0:
                raise ValueError("exponents must be finite and nonnegative")

    def dominates(self, other: "ExponentPair") -> bool:
        """Coordinatewise >= with strict improvement in at least one axis."""
        return (
            self.e1 >= other.e1
            and self.e2 >= other.e2
            and (self.e1 > other.e1 or self.e2 > other.e2)
        )


@dataclass(frozen=True)
class ChernoffPoint:
    """The crossing tilt and the common tilted divergence there."""

    lambda_star: float
    d_star: float


@dataclass(frozen=True)
class RegionBoundary:
    """An ordered list of boundary points, with the tilt that produced each
    point where one exists (None for corner/derived points)."""

    points: tuple[ExponentPair, ...]
    kind: str
    lambdas: tuple[float | None, ...]

    def __post_init__(self) -> None:
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if len(self.points) != len(self.lambdas):
            raise ValueError("points and lambdas must be parallel")
        if self.kind == "fd_curve":
            for a, b in zip(self.points, self.points[1:]):
                if b.e1 < a.e1 - 1e-12 or b.e2 > a.e2 + 1e-12:
                    raise ValueError("fd_curve must trade e1 up against e2 down")
        if self.kind == "envelope":
            for a, b in zip(self.points, self.points[1:]):
                if b.e1 <= a.e1 or b.e2 >= a.e2:
                    raise ValueError("envelope must be a strict Pareto frontier")


@dataclass(frozen=True)
class TwoPhaseDesign:
    """All thresholds defining one concrete two-phase test.

    Phase I compares the n-sample normalized LLR against (alpha1, beta1);
    the open band between them continues into a fresh k*n-sample phase II
    thresholded at alpha2.  alpha1 comes from the low tilt lambda_b and
    beta1 from the high tilt lambda_a: that is the assignment under which
    the phase-I error exponents equal the targets (e1_target, e2_target)
    and both continuation exponents equal gamma.
    """

    gamma: float
    k: int
    lambda_a: float
    lambda_b: float
    alpha1: float
    beta1: float
    phase2_lambda: float
    alpha2: float
    e1_target: float
    e2_target: float


def _require_finite_kls(pair: HypothesisPair) -> tuple[float, float]:
    k12 = kl(pair.p1, pair.p2)
    k21 = kl(pair.p2, pair.p1)
    if math.isinf(k12) or math.isinf(k21):
        raise ValueError("hypotheses must share full support (finite KL both ways)")
    return k12, k21


def chernoff(pair: HypothesisPair, tol: float = DEFAULT_TOL) -> ChernoffPoint:
    """Find the tilt where the two tilted divergences cross, by bisection.

    kl(tilt(lam), P1) - kl(tilt(lam), P2) increases strictly in lam, so the
    crossing is unique; iteration stops once the residual is within tol.
    Identical hypotheses return (0.5, 0.0).
    """
    k12, k21 = _require_finite_kls(pair)
    if k12 == 0.0 and k21 == 0.0:
        return ChernoffPoint(0.5, 0.0)
    lo, hi = 0.0, 1.0
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        q = tilt(pair, mid)
        d1 = kl(q, pair.p1)
        diff = d1 - kl(q, pair.p2)
        if abs(diff) <= tol:
            return ChernoffPoint(mid, d1)
        if diff < 0.0:
            lo = mid
        else:
            hi = mid
    raise ArithmeticError("chernoff bisection did not reach tolerance")


def _solve_tilted_kl(
    pair: HypothesisPair, against_p1: bool, target: float, tol: float
) -> float:
    """Tilt at which kl(tilt(lam), P1) (increasing) or kl(tilt(lam), P2)
    (decreasing) equals target; target must be within range."""
    ref = pair.p1 if against_p1 else pair.p2
    lo, hi = 0.0, 1.0
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        val = kl(tilt(pair, mid), ref)
        if abs(val - target) <= tol:
            return mid
        below = val < target if against_p1 else val > target
        if below:
            lo = mid
        else:
            hi = mid
    raise ArithmeticError("tilted-KL bisection did not reach tolerance")


def seq_corner(pair: HypothesisPair) -> ExponentPair:
    """Corner of the rectangular region attainable by sequential tests."""
    k12, k21 = _require_finite_kls(pair)
    return ExponentPair(k21, k12)


def fd_boundary(pair: HypothesisPair, grid: int = DEFAULT_GRID) -> RegionBoundary:
    """Fixed-length tradeoff curve (kl(tilt, P1), kl(tilt, P2)) on a uniform
    tilt grid over [0, 1]; the endpoints 0 and 1 are hit exactly."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    _require_finite_kls(pair)
    lams = tuple(i / (grid - 1) for i in range(grid))
    points = []
    for lam in lams:
        q = tilt(pair, lam)
        points.append(ExponentPair(kl(q, pair.p1), kl(q, pair.p2)))
    return RegionBoundary(tuple(points), "fd_curve", lams)


def e_gamma(
    pair: HypothesisPair, gamma: float, tol: float = DEFAULT_TOL
) -> tuple[float, float, float, float]:
    """Corner exponents (E1, E2) of the almost-fixed-length region at gamma,
    plus the tilts (lambda_a, lambda_b) attaining them.

    E1 maximizes kl(tilt, P1) subject to kl(tilt, P2) >= gamma, so lambda_a
    solves kl(tilt, P2) = gamma; symmetrically for E2 and lambda_b.  gamma=0
    makes both constraints vacuous and returns the sequential corner.  A
    gamma beyond an attainable plain KL clamps that side to its feasible
    endpoint tilt.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    k12, k21 = _require_finite_kls(pair)
    if gamma == 0.0:
        return k21, k12, 1.0, 0.0
    lam_a = 0.0 if gamma >= k12 else _solve_tilted_kl(pair, False, gamma, tol)
    lam_b = 1.0 if gamma >= k21 else _solve_tilted_kl(pair, True, gamma, tol)
    e1 = kl(tilt(pair, lam_a), pair.p1)
    e2 = kl(tilt(pair, lam_b), pair.p2)
    return e1, e2, lam_a, lam_b


def _pareto(entries: list[tuple[float, float, float | None]]) -> RegionBoundary:
    """Pareto frontier (maximal points under coordinatewise <=) of a point
    cloud, duplicates removed, sorted by ascending e1."""
    if not entries:
        raise ValueError("no points to take an envelope of")
    best_e2 = -math.inf
    kept: list[tuple[float, float, float | None]] = []
    for e1, e2, lam in sorted(entries, key=lambda t: (-t[0], -t[1])):
        if e2 > best_e2:
            kept.append((e1, e2, lam))
            best_e2 = e2
    kept.reverse()
    return RegionBoundary(
        tuple(ExponentPair(e1, e2) for e1, e2, _ in kept),
        "envelope",
        tuple(lam for _, _, lam in kept),
    )


def gamma_region(
    pair: HypothesisPair,
    gamma: float,
    grid: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
) -> RegionBoundary:
    """Envelope of the almost-fixed-length region: the fixed-length curve
    joined with the axis-aligned box whose corner is (E1(gamma), E2(gamma)).

    The corner sits inside the fixed-length region exactly when
    E2(gamma) <= gamma (equivalently gamma >= the crossing divergence), in
    which case the envelope is the curve alone.
    """
    e1, e2, _, _ = e_gamma(pair, gamma, tol)
    fd = fd_boundary(pair, grid)
    entries = [(p.e1, p.e2, lam) for p, lam in zip(fd.points, fd.lambdas)]
    if e2 > gamma:
        entries.append((e1, e2, None))
    return _pareto(entries)


def two_phase_design(
    pair: HypothesisPair,
    gamma: float,
    k: int,
    phase2_lambda: float | None = None,
    tol: float = DEFAULT_TOL,
) -> TwoPhaseDesign:
    """Thresholds of the two-phase test at continuation exponent gamma.

    Requires 0 < gamma <= the crossing divergence; at equality the band
    closes (alpha1 = beta1) and the test degenerates to fixed-length.
    phase2_lambda defaults to the crossing tilt, making alpha2 ~ 0.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    cp = chernoff(pair, tol)
    if cp.d_star == 0.0:
        raise ValueError("identical hypotheses admit no two-phase design")
    if gamma > cp.d_star:
        raise ValueError(
            f"gamma={gamma!r} exceeds the crossing divergence {cp.d_star!r}; "
            "use a fixed-length test instead"
        )
    e1, e2, lam_a, lam_b = e_gamma(pair, gamma, tol)
    qa = tilt(pair, lam_a)
    qb = tilt(pair, lam_b)
    alpha1 = kl(qb, pair.p2) - kl(qb, pair.p1)
    beta1 = kl(qa, pair.p2) - kl(qa, pair.p1)
    if phase2_lambda is None:
        phase2_lambda = cp.lambda_star
    if not 0.0 <= phase2_lambda <= 1.0:
        raise ValueError("phase2_lambda must lie in [0, 1]")
    q2 = tilt(pair, phase2_lambda)
    alpha2 = kl(q2, pair.p2) - kl(q2, pair.p1)
    return TwoPhaseDesign(
        gamma=gamma,
        k=k,
        lambda_a=lam_a,
        lambda_b=lam_b,
        alpha1=alpha1,
        beta1=beta1,
        phase2_lambda=phase2_lambda,
        alpha2=alpha2,
        e1_target=e1,
        e2_target=e2,
    )


def kstar(pair: HypothesisPair, tol: float = DEFAULT_TOL) -> tuple[float, int]:
    """Phase-II length multiple above which the two-phase test covers the
    whole gamma-region box: raw ratio max(KL21, KL12)/D* and its ceiling."""
    cp = chernoff(pair, tol)
    if cp.d_star <= 0.0:
        raise ValueError("identical hypotheses: crossing divergence is zero")
    k12, k21 = _require_finite_kls(pair)
    raw = max(k21, k12) / cp.d_star
    return raw, math.ceil(raw)


def two_phase_region(
    pair: HypothesisPair,
    gamma: float,
    k: int,
    grid: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
) -> RegionBoundary:
    """Envelope achieved by the two-phase test: sweep the phase-II tilt and
    emit the coordinatewise min of the gamma-corner targets and
    gamma + k * (tilted divergences).  The crossing tilt is always included
    in the sweep so the full corner appears whenever k is large enough."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    cp = chernoff(pair, tol)
    if gamma > cp.d_star:
        raise ValueError(
            f"gamma={gamma!r} exceeds the crossing divergence {cp.d_star!r}"
        )
    e1, e2, _, _ = e_gamma(pair, gamma, tol)
    lams = sorted({i / (grid - 1) for i in range(grid)} | {cp.lambda_star})
    entries = []
    for lam in lams:
        q = tilt(pair, lam)
        entries.append(
            (
                min(e1, gamma + k * kl(q, pair.p1)),
                min(e2, gamma + k * kl(q, pair.p2)),
                lam,
            )
        )
    return _pareto(entries)


def region_envelope(curves: list[RegionBoundary]) -> RegionBoundary:
    """Pareto frontier of the union of several boundaries."""
    if not curves:
        raise ValueError("no curves given")
    entries = []
    for curve in curves:
        entries.extend(
            (p.e1, p.e2, lam) for p, lam in zip(curve.points, curve.lambdas)
        )
    return _pareto(entries)
