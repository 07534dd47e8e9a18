import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from paircal.datagen import SyntheticConfig, sample_outcome, uniform_sampler
from paircal.errors import InputError, MatchFailure
from paircal.matching import (
    ExperimentRecord, MatchedPair, assign_and_run, bounded_noise_constant,
    empirical_label_rate, find_match, label_pair, label_probability,
)

import oracles


def _record(diff, a=1, base=1.0):
    y_t, y_c = base + diff, base
    pair = MatchedPair(np.array([0.1, 0.2]), np.array([0.1, 0.2]))
    if a == 1:
        return ExperimentRecord(pair, 1, y_t, y_c, 1)
    return ExperimentRecord(pair, 0, y_c, y_t, 1)


class TestFindMatch:
    def test_exact_mode(self):
        x = np.array([0.3, 0.7])
        m = find_match(x, uniform_sampler, 0.01, exact=True)
        assert np.array_equal(m, x)

    def test_infinite_tolerance_single_pool(self):
        p = np.array([[0.9, 0.1]])
        assert np.array_equal(find_match([0.0, 0.0], p, math.inf), p[0])

    def test_sampler_within_tolerance(self):
        x = np.array([0.5, 0.5])
        m = find_match(x, uniform_sampler, 0.01, rng=np.random.default_rng(0))
        assert math.hypot(*(m - x)) <= 0.01

    def test_sampler_gives_up(self):
        with pytest.raises(MatchFailure):
            find_match([5.0, 5.0], uniform_sampler, 0.01, rng=np.random.default_rng(0), max_draws=5000)

    def test_pool_no_neighbour(self):
        with pytest.raises(MatchFailure):
            find_match([0.0, 0.0], np.array([[1.0, 1.0]]), 0.1)

    def test_negative_tolerance(self):
        with pytest.raises(InputError):
            find_match([0.0, 0.0], np.array([[1.0, 1.0]]), -1)

    def test_pool_nearest(self):
        pool = np.array([[0.0, 0.3], [0.0, 0.1], [0.0, 0.2]])
        assert np.array_equal(find_match([0.0, 0.0], pool, 1.0), pool[1])


class TestAssignAndRun:
    def test_fair_coin(self):
        rng = np.random.default_rng(11)
        pair = MatchedPair(np.zeros(2), np.zeros(2))
        a = [assign_and_run(pair, lambda x, a, r: 0.0, rng, 1).assignment_left for _ in range(100_000)]
        assert abs(np.mean(a) - 0.5) < 0.005

    def test_h0_noise_free_equal(self):
        cfg = SyntheticConfig(hypothesis="H0", sigma2=1e-16)
        x = np.array([0.4, 0.6])
        rec = assign_and_run(MatchedPair(x, x.copy()), lambda x, a, r: sample_outcome(x, a, cfg, r),
                             np.random.default_rng(0), 1)
        assert rec.y_left == pytest.approx(rec.y_right, abs=1e-6)

    def test_h1_noise_free_difference(self):
        cfg = SyntheticConfig(sigma2=1e-16)
        x = np.array([0.2, 0.9])
        for seed in range(6):
            rec = assign_and_run(MatchedPair(x, x.copy()), lambda x, a, r: sample_outcome(x, a, cfg, r),
                                 np.random.default_rng(seed), 1)
            assert rec.difference == pytest.approx(1.0, abs=1e-6)

    def test_right_gets_opposite(self):
        seen = []
        pair = MatchedPair(np.array([0.0]), np.array([1.0]))
        rec = assign_and_run(pair, lambda x, a, r: seen.append((x[0], a)) or 0.0,
                             np.random.default_rng(2), 1)
        assert seen == [(0.0, rec.assignment_left), (1.0, 1 - rec.assignment_left)]


class TestLabelPair:
    @pytest.mark.parametrize("diff,z", [(1.0, 1), (0.2, 1), (0.19, 0)])
    def test_threshold(self, diff, z):
        left, right = label_pair(_record(diff, base=0.0), 0.2)
        assert left.z == right.z == z

    def test_non_finite_gamma(self):
        with pytest.raises(InputError):
            label_pair(_record(1.0), math.nan)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-2, 2))
    def test_assignment_symmetry(self, yt, yc, gamma):
        pair = MatchedPair(np.zeros(2), np.zeros(2))
        a = label_pair(ExperimentRecord(pair, 1, yt, yc, 1), gamma)[0].z
        b = label_pair(ExperimentRecord(pair, 0, yc, yt, 1), gamma)[0].z
        assert a == b


class TestLabelNoise:
    def test_analytic_probabilities(self):
        cfg = SyntheticConfig()
        assert label_probability((0.2, 0.9), cfg, 0.2) == pytest.approx(0.9631808649398487, abs=1e-12)
        assert label_probability((0.9, 0.2), cfg, 0.2) == pytest.approx(0.3273604230092885, abs=1e-12)
        assert oracles.label_prob(1, 0.1, 0.2) == pytest.approx(0.9631808649398487, abs=1e-15)

    def test_empirical_matches_analytic(self):
        cfg = SyntheticConfig()
        pts = np.array([[0.2, 0.9], [0.9, 0.2], [0.1, 0.55]])
        rate = empirical_label_rate(pts, cfg, 0.2, 40_000, np.random.default_rng(0))
        exact = label_probability(pts, cfg, 0.2)
        assert np.all(np.abs(rate - exact) <= 3 * np.sqrt(exact * (1 - exact) / 40_000))

    def test_bounded_noise_constant(self):
        eta = np.array([0.9631808649398487, 0.3273604230092885])
        assert bounded_noise_constant(eta) == pytest.approx(2.896207281757308, rel=1e-12)
        assert bounded_noise_constant([0.5]) == math.inf
