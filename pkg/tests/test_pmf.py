import math

import mpmath
import numpy as np
import pytest

from afht import HypothesisPair, Pmf, bernoulli, kl, llr_sum, make_pmf, tilt
from conftest import random_pair

# frozen via 50-digit direct summation (see test_kl_bernoulli_example)
KL_P1_P2 = 1.1457255029306632
KL_P2_P1 = 1.3627377539886139
LLR_ONE = 1.5040773967762742  # log(0.9/0.2)
LLR_ZERO = -2.0794415416798357  # log(0.1/0.8)


def hp_kl(p, q) -> float:
    with mpmath.workdps(50):
        total = mpmath.fsum(
            mpmath.mpf(a) * mpmath.log(mpmath.mpf(a) / mpmath.mpf(b))
            for a, b in zip(p, q)
            if a > 0
        )
        return float(total)


class TestMakePmf:
    def test_already_normalized_kept_exactly(self):
        assert make_pmf([0.9, 0.1]).probs == (0.9, 0.1)

    def test_symmetric_weights(self):
        assert make_pmf([2, 2]).probs == (0.5, 0.5)

    def test_exact_zeros_preserved(self):
        assert make_pmf([0.5, 0.0, 1.5]).probs[1] == 0.0

    def test_negative_entry_rejected(self):
        with pytest.raises(ValueError):
            make_pmf([-0.1, 1.1])

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            make_pmf([0.0, 0.0])

    def test_short_vector_rejected(self):
        with pytest.raises(ValueError):
            make_pmf([1.0])

    def test_pmf_rejects_far_from_normalized(self):
        with pytest.raises(ValueError):
            Pmf((0.5, 0.4))

    def test_pmf_renormalizes_tiny_residual(self):
        p = Pmf((0.5, 0.5 + 5e-13))
        assert math.fsum(p.probs) == pytest.approx(1.0, abs=1e-15)


class TestPair:
    def test_llr_values(self):
        pair = HypothesisPair(bernoulli(0.9), bernoulli(0.2))
        assert pair.llr[1] == pytest.approx(LLR_ONE, abs=1e-15)
        assert pair.llr[0] == pytest.approx(LLR_ZERO, abs=1e-15)

    def test_one_sided_support_gets_infinite_llr(self):
        pair = HypothesisPair(make_pmf([0.5, 0.5, 0.0]), make_pmf([0.25, 0.25, 0.5]))
        assert pair.llr[2] == -math.inf
        pair = HypothesisPair(make_pmf([0.25, 0.25, 0.5]), make_pmf([0.5, 0.5, 0.0]))
        assert pair.llr[2] == math.inf

    def test_jointly_dead_symbols_trimmed(self):
        pair = HypothesisPair(Pmf((0.4, 0.6, 0.0)), Pmf((0.7, 0.3, 0.0)))
        assert pair.m == 2
        assert pair.p1.probs == (0.4, 0.6)

    def test_alphabet_mismatch_rejected(self):
        with pytest.raises(ValueError):
            HypothesisPair(make_pmf([0.5, 0.5]), make_pmf([0.3, 0.3, 0.4]))


class TestKl:
    def test_identity_is_exactly_zero(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = random_pair(rng).p1
            assert kl(p, p) == 0.0

    def test_bernoulli_example(self):
        v = kl(bernoulli(0.9), bernoulli(0.2))
        assert v == pytest.approx(hp_kl((0.1, 0.9), (0.8, 0.2)), abs=1e-12)
        assert v == pytest.approx(1.145725, abs=1e-6)
        assert v == pytest.approx(KL_P1_P2, abs=1e-12)

    def test_missing_mass_is_infinite(self):
        assert kl(bernoulli(0.5), bernoulli(0.0)) == math.inf

    def test_zero_mass_contributes_nothing(self):
        # 0*log(0/q) = 0: only the supported symbols matter
        assert kl(Pmf((0.0, 1.0)), Pmf((0.5, 0.5))) == pytest.approx(
            math.log(2.0), abs=1e-15
        )

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError):
            kl(make_pmf([0.5, 0.5]), make_pmf([0.3, 0.3, 0.4]))

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            pair = random_pair(rng)
            forward = kl(pair.p1, pair.p2)
            assert forward >= 0.0
            same = max(
                abs(a - b) for a, b in zip(pair.p1.probs, pair.p2.probs)
            ) <= 1e-12
            assert (forward == 0.0) == same


class TestTilt:
    def test_endpoints_reproduce_the_hypotheses_exactly(self):
        pair = HypothesisPair(make_pmf([0.5, 0.5, 0.0]), make_pmf([0.25, 0.25, 0.5]))
        assert tilt(pair, 0.0).probs == pair.p1.probs
        assert tilt(pair, 1.0).probs == pair.p2.probs

    def test_bernoulli_midpoint_closed_form(self):
        # sqrt(0.18) / (sqrt(0.18) + sqrt(0.08)) = 0.6
        pair = HypothesisPair(bernoulli(0.9), bernoulli(0.2))
        assert tilt(pair, 0.5).probs[1] == pytest.approx(0.6, abs=1e-12)

    def test_disjoint_support_interior_rejected(self):
        pair = HypothesisPair(Pmf((1.0, 0.0)), Pmf((0.0, 1.0)))
        with pytest.raises(ValueError):
            tilt(pair, 0.5)

    def test_out_of_range_lambda(self):
        pair = HypothesisPair(bernoulli(0.9), bernoulli(0.2))
        with pytest.raises(ValueError):
            tilt(pair, 1.5)

    def test_normalization_along_the_family(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            pair = random_pair(rng)
            for lam in np.linspace(0.0, 1.0, 25):
                assert math.fsum(tilt(pair, float(lam)).probs) == pytest.approx(
                    1.0, abs=1e-12
                )

    def test_tilted_divergences_monotone(self):
        # kl(tilt, P1) climbs 0 -> KL(P2||P1); kl(tilt, P2) falls KL(P1||P2) -> 0
        rng = np.random.default_rng(7)
        for _ in range(20):
            pair = random_pair(rng)
            lams = np.linspace(0.0, 1.0, 101)
            to_p1 = [kl(tilt(pair, float(l)), pair.p1) for l in lams]
            to_p2 = [kl(tilt(pair, float(l)), pair.p2) for l in lams]
            assert all(b > a for a, b in zip(to_p1, to_p1[1:]))
            assert all(b < a for a, b in zip(to_p2, to_p2[1:]))
            assert to_p1[0] == 0.0
            assert to_p1[-1] == pytest.approx(kl(pair.p2, pair.p1), abs=1e-12)
            assert to_p2[-1] == 0.0


class TestLlrSum:
    def test_empty_sequence(self, bern_pair):
        assert llr_sum(bern_pair, []) == 0.0

    def test_all_ones(self, bern_pair):
        assert llr_sum(bern_pair, [1, 1, 1]) == pytest.approx(
            4.512232190328823, abs=1e-6
        )

    def test_single_zero(self, bern_pair):
        assert llr_sum(bern_pair, [0]) == pytest.approx(-2.079442, abs=1e-6)

    def test_out_of_range_symbol(self, bern_pair):
        with pytest.raises(ValueError):
            llr_sum(bern_pair, [0, 2])

    def test_conflicting_infinities(self):
        pair = HypothesisPair(make_pmf([0.5, 0.5, 0.0]), make_pmf([0.5, 0.0, 0.5]))
        assert llr_sum(pair, [1]) == math.inf
        assert llr_sum(pair, [2]) == -math.inf
        with pytest.raises(ValueError):
            llr_sum(pair, [1, 2])

    def test_additive_over_concatenation(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            pair = random_pair(rng)
            a = list(rng.integers(0, pair.m, size=rng.integers(0, 12)))
            b = list(rng.integers(0, pair.m, size=rng.integers(0, 12)))
            assert llr_sum(pair, a + b) == pytest.approx(
                llr_sum(pair, a) + llr_sum(pair, b), abs=1e-12
            )
