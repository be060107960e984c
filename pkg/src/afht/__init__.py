"""Error-exponent geometry and runnable binary hypothesis tests on finite alphabets."""

from .exact import (
    ErrorReport,
    FitResult,
    GuardExceeded,
    exact_fixed,
    exact_rejection,
    exact_sprt_truncated,
    exact_two_phase,
    exponent_fit,
)
from .exponents import (
    ChernoffPoint,
    ExponentPair,
    RegionBoundary,
    TwoPhaseDesign,
    chernoff,
    e_gamma,
    fd_boundary,
    gamma_region,
    kstar,
    region_envelope,
    seq_corner,
    two_phase_design,
    two_phase_region,
)
from .mc import (
    MomentReport,
    SeedSpec,
    SimReport,
    SweepResult,
    moment_check,
    simulate,
    sweep,
    wilson_interval,
)
from .pmf import (
    HypothesisPair,
    Pmf,
    bernoulli,
    kl,
    llr_statistic,
    llr_sum,
    make_pmf,
    tilt,
)
from .procedures import (
    FixedTest,
    RejectionTest,
    SprtConfig,
    SprtTest,
    TestOutcome,
    TwoPhaseTest,
    run_fixed,
    run_rejection,
    run_sprt,
    run_two_phase,
)

__version__ = "0.1.0"
