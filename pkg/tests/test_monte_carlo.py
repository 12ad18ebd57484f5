"""Tests for the Monte-Carlo oracle and moment estimators."""

import math
import unittest

import numpy as np

from analysis.channel import ChannelParams, power_surrogate
from analysis.exceptions import DomainError, ZeroVectorError
from analysis.qd import QdScenario, cos2_angle, q_threshold
from analysis.quadform import theta_numerator_surrogate
from services.monte_carlo import (
    MIN_SAMPLES,
    chunk_plan,
    dpc_power,
    dpc_power_from_stats,
    empirical_mean_projector,
    empirical_outer_trace,
    empirical_power_moments,
    empirical_projector_trace,
    empirical_quadform_moments,
    estimate_qd_prob,
    toy_example_report,
)

PAIR_GI = np.array([1.0, 1.0])
PAIR_GJ = np.array([1.0, 0.8 + 0.6j])


class TestChunking(unittest.TestCase):
    """Test cases for the chunk plan and worker invariance."""

    def test_chunk_plan(self):
        """Full chunks followed by the remainder."""
        self.assertEqual(chunk_plan(25, 10), [(0, 10), (1, 10), (2, 5)])
        self.assertEqual(chunk_plan(10, 10), [(0, 10)])

    def test_chunk_plan_invalid(self):
        """Chunk size must be positive."""
        with self.assertRaises(DomainError):
            chunk_plan(10, 0)

    def test_minimum_samples(self):
        """Fewer than 1000 trials are rejected."""
        s = QdScenario.from_table_defaults(5.0, 5.0, 10.0)
        with self.assertRaises(DomainError):
            estimate_qd_prob(s, MIN_SAMPLES - 1, seed=1)

    def test_worker_invariance(self):
        """The same seed gives the same estimate for one or several workers."""
        s = QdScenario.from_table_defaults(5.0, 5.0, 10.0)
        single = estimate_qd_prob(s, 4000, seed=3, chunk_size=1000, workers=1)
        several = estimate_qd_prob(s, 4000, seed=3, chunk_size=1000, workers=3)
        self.assertEqual(single.value, several.value)
        self.assertEqual(single.std_error, several.std_error)

    def test_seed_dependence(self):
        """Different seeds give different draws."""
        p = ChannelParams.from_degrees(beta=1.0, k_db=5.0, theta_deg=30.0)
        a = empirical_power_moments(p, 2000, seed=1)
        b = empirical_power_moments(p, 2000, seed=2)
        self.assertNotEqual(a.mean, b.mean)
        self.assertEqual(a.mean, empirical_power_moments(p, 2000, seed=1).mean)


class TestQdEstimate(unittest.TestCase):
    """Test cases for the empirical QD probability."""

    def test_estimate_fields(self):
        """Binomial standard error and bookkeeping."""
        s = QdScenario.from_table_defaults(5.0, 25.0, 10.0)
        est = estimate_qd_prob(s, 5000, seed=11)
        self.assertTrue(0.0 <= est.value <= 1.0)
        self.assertAlmostEqual(est.std_error, math.sqrt(est.value * (1.0 - est.value) / 5000), places=14)
        self.assertEqual(est.n_samples, 5000)
        self.assertEqual(est.seed, 11)

    def test_matches_pairwise_indicator(self):
        """The vectorized decision agrees with the scalar one on the same draws."""
        from analysis.channel import sample, stream_for
        from analysis.qd import qd_indicator
        s = QdScenario.from_table_defaults(3.0, 10.0, 10.0)
        n = 1000
        est = estimate_qd_prob(s, n, seed=4, chunk_size=n)
        rng = stream_for(4, 0)
        gi = sample(s.user_i, rng, n)
        gj = sample(s.user_j, rng, n)
        hits = sum(qd_indicator(a, b, s.r_i, s.r_j) for a, b in zip(gi, gj))
        self.assertEqual(est.value, hits / n)


class TestMomentEstimators(unittest.TestCase):
    """Test cases for the empirical moments that check each surrogate."""

    def setUp(self):
        """Set up test fixtures."""
        self.p = ChannelParams.from_degrees(beta=2.0, k_db=6.0, theta_deg=35.0)
        self.n = 100000

    def test_power_moments(self):
        """Power mean within 4 standard errors and variance within 5% of the surrogate."""
        g = power_surrogate(self.p)
        est = empirical_power_moments(self.p, self.n, seed=5)
        self.assertLess(abs(est.mean - g.mean()), 4.0 * est.mean_std_error)
        self.assertLess(abs(est.var / g.var() - 1.0), 0.05)
        self.assertGreater(est.var_std_error, 0.0)

    def test_projector_trace(self):
        """Every projector has unit trace."""
        est = empirical_projector_trace(self.p, 5000, seed=6)
        self.assertAlmostEqual(est.value, 1.0, places=12)
        self.assertLess(est.std_error, 1e-12)

    def test_outer_trace(self):
        """tr(E[g g^H]) = N beta."""
        est = empirical_outer_trace(self.p, self.n, seed=7)
        self.assertLess(abs(est.value - 8.0), 4.0 * est.std_error)

    def test_mean_projector(self):
        """Sample mean of Pi_g is Hermitian with unit trace."""
        mat = empirical_mean_projector(self.p, 5000, seed=8, chunk_size=1000)
        self.assertEqual(mat.shape, (4, 4))
        np.testing.assert_allclose(mat, mat.conj().T, atol=1e-12)
        self.assertAlmostEqual(float(np.trace(mat).real), 1.0, places=10)

    def test_quadform_moments(self):
        """Q_{Pi_{g_j}}(g_i) sample mean is close to the surrogate mean."""
        s = QdScenario.from_table_defaults(10.0, 10.0, 10.0)
        v = theta_numerator_surrogate(s.user_i, s.user_j)
        est = empirical_quadform_moments(s, self.n, seed=9)
        self.assertLess(abs(est.mean / v.mean() - 1.0), 0.1)

    def test_quadform_line_of_sight_limit(self):
        """With K = inf the form is deterministic."""
        los_i = ChannelParams(beta=1.0, k_factor=math.inf, theta=0.3)
        los_j = ChannelParams(beta=1.0, k_factor=math.inf, theta=0.6)
        est = empirical_quadform_moments(QdScenario(user_i=los_i, user_j=los_j), 2000, seed=1)
        self.assertLess(est.var, 1e-20)


class TestDpcAndToyExample(unittest.TestCase):
    """Test cases for the DPC power and the single-pair report."""

    def test_toy_dpc_power(self):
        """Powers 180.5 and 13.5 with Theta = 0.236 and unit rates, sin taken in radians."""
        value = dpc_power_from_stats(180.5, 13.5, 0.236, 1.0, 1.0)
        self.assertAlmostEqual(value, 0.0830546, places=6)
        self.assertEqual(round(value, 2), 0.08)

    def test_sin_squared_variant(self):
        """The 1 - Theta reading gives a different value."""
        theta = cos2_angle(PAIR_GI, PAIR_GJ)
        expected = 0.5 + 0.5 * 2.0 / (1.0 + (1.0 - theta))
        self.assertAlmostEqual(dpc_power(PAIR_GI, PAIR_GJ, 1.0, 1.0, sin_squared=True), expected, places=14)

    def test_orthogonal_formula(self):
        """At Theta = 0 the power is r_j/||g_j||^2 + r_i (1 + r_j)/||g_i||^2."""
        value = dpc_power_from_stats(2.0, 4.0, 0.0, 1.5, 0.5)
        self.assertAlmostEqual(value, 0.5 / 4.0 + 1.5 * 1.5 / 2.0, places=14)

    def test_homogeneity(self):
        """Scaling both channels by c scales the power by 1/c^2."""
        base = dpc_power(PAIR_GI, PAIR_GJ, 1.0, 2.0)
        self.assertAlmostEqual(dpc_power(3.0 * PAIR_GI, 3.0 * PAIR_GJ, 1.0, 2.0), base / 9.0, places=14)

    def test_zero_power(self):
        """Zero channel powers are rejected."""
        with self.assertRaises(ZeroVectorError):
            dpc_power_from_stats(0.0, 1.0, 0.5, 1.0, 1.0)

    def test_pair_report(self):
        """Report fields agree with the building blocks."""
        report = toy_example_report(PAIR_GI, PAIR_GJ, 1.0, 1.0)
        theta = cos2_angle(PAIR_GI, PAIR_GJ)
        self.assertAlmostEqual(report.theta, theta, places=15)
        self.assertAlmostEqual(report.theta, 0.9, places=14)
        self.assertAlmostEqual(report.q_threshold, q_threshold(theta, 1.0, 1.0), places=14)
        self.assertAlmostEqual(report.xi, 1.0, places=15)
        self.assertEqual(report.quasi_degraded, report.q_threshold <= report.xi)
        self.assertAlmostEqual(report.dpc_power, dpc_power(PAIR_GI, PAIR_GJ, 1.0, 1.0), places=15)


if __name__ == '__main__':
    unittest.main()
