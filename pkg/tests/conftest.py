from __future__ import annotations

import numpy as np
import pytest

from afht import HypothesisPair, Pmf, RegionBoundary, bernoulli


@pytest.fixture
def bern_pair() -> HypothesisPair:
    """The running example: Bernoulli(0.9) against Bernoulli(0.2)."""
    return HypothesisPair(bernoulli(0.9), bernoulli(0.2))


def random_pair(rng: np.random.Generator, m: int | None = None, floor: float = 0.05) -> HypothesisPair:
    """A full-support pair with entries bounded away from zero, so both KLs
    stay finite and moderate."""
    if m is None:
        m = int(rng.integers(2, 5))
    def vec() -> Pmf:
        v = rng.uniform(floor, 1.0, size=m)
        return Pmf(tuple(v / v.sum()))
    return HypothesisPair(vec(), vec())


def boundary_xy(boundary: RegionBoundary) -> list[tuple[float, float]]:
    return [(p.e1, p.e2) for p in boundary.points]


def covered(point: tuple[float, float], cloud, slack: float = 1e-12) -> bool:
    """point is weakly dominated by some cloud point (within slack)."""
    return any(c[0] + slack >= point[0] and c[1] + slack >= point[1] for c in cloud)


def region_contains(outer, inner, slack: float = 1e-12) -> bool:
    """Every inner envelope point lies under some outer envelope point."""
    return all(covered(p, outer, slack) for p in inner)


def tilted_kl_grid(pair: HypothesisPair, steps: int):
    """Independent check path: tilted divergences on a uniform tilt grid,
    straight from the defining formulas, vectorized."""
    p1 = np.asarray(pair.p1.probs)
    p2 = np.asarray(pair.p2.probs)
    lams = np.linspace(0.0, 1.0, steps)
    w = p1[None, :] ** (1.0 - lams[:, None]) * p2[None, :] ** lams[:, None]
    q = w / w.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(q > 0.0, q * np.log(q / p1[None, :]), 0.0)
        t2 = np.where(q > 0.0, q * np.log(q / p2[None, :]), 0.0)
    return lams, t1.sum(axis=1), t2.sum(axis=1)
