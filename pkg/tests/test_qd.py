"""Tests for the QD probability routes and the pairwise bound."""

import math
import unittest

import numpy as np

from analysis.channel import ChannelParams
from analysis.exceptions import DimensionMismatchError, DomainError, SeriesDivergenceError, ShapeTooSmallError, ZeroVectorError
from analysis.qd import (
    QdScenario,
    cos2_angle,
    cos2_angle_projector,
    pairwise_lower_bound,
    q_threshold,
    qd_indicator,
    qd_prob_quadrature,
    qd_prob_series,
    qd_surrogates,
)


def random_pairs(seed: int, count: int, n: int = 4):
    rng = np.random.default_rng(seed)
    shape = (count, n)
    gi = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    gj = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return gi, gj


class TestThreshold(unittest.TestCase):
    """Test cases for Q(Theta)."""

    def test_value_at_one(self):
        """Q(1) = 1 for any rates."""
        for r_i, r_j in ((1.0, 1.0), (0.3, 4.0), (7.0, 0.2)):
            self.assertAlmostEqual(q_threshold(1.0, r_i, r_j), 1.0, places=14)

    def test_known_value(self):
        """Q(1/2) with unit rates is 4 - 1/(2 * 2.25)."""
        self.assertAlmostEqual(q_threshold(0.5, 1.0, 1.0), 4.0 - 0.5 / 2.25, places=14)

    def test_slope_at_one(self):
        """Q'(1) = -(1 + r_i) - r_i (1 + 2 r_j), which is -5 for unit rates."""
        h = 1e-6
        slope = (q_threshold(1.0, 1.0, 1.0) - q_threshold(1.0 - h, 1.0, 1.0)) / h
        self.assertAlmostEqual(slope, -5.0, places=4)

    def test_at_least_one(self):
        """Q >= 1 on (0, 1] for unit rates."""
        t = np.linspace(1e-3, 1.0, 500)
        self.assertTrue(np.all(q_threshold(t, 1.0, 1.0) >= 1.0 - 1e-12))

    def test_vectorized(self):
        """Arrays in, arrays out; scalars in, float out."""
        t = np.array([0.25, 0.5, 1.0])
        values = q_threshold(t, 1.0, 2.0)
        self.assertEqual(values.shape, (3,))
        for x, v in zip(t, values):
            self.assertAlmostEqual(v, q_threshold(float(x), 1.0, 2.0), places=14)
        self.assertIsInstance(q_threshold(0.5, 1.0, 2.0), float)

    def test_domain(self):
        """Theta must lie in (0, 1]."""
        for bad in (0.0, -0.2, 1.5):
            with self.assertRaises(DomainError):
                q_threshold(bad, 1.0, 1.0)
        with self.assertRaises(DomainError):
            q_threshold(np.array([0.5, 0.0]), 1.0, 1.0)


class TestAngle(unittest.TestCase):
    """Test cases for the squared cosine and the QD decision."""

    def test_two_routes_agree(self):
        """Inner-product and projector forms agree on random pairs."""
        gi, gj = random_pairs(7, 1000)
        for a, b in zip(gi, gj):
            self.assertAlmostEqual(cos2_angle(a, b), cos2_angle_projector(a, b), delta=1e-10)

    def test_extremes(self):
        """Parallel vectors give 1, orthogonal vectors give 0."""
        g = np.array([1 + 1j, 0.5, -2j])
        self.assertAlmostEqual(cos2_angle(g, (2 - 3j) * g), 1.0, places=14)
        self.assertEqual(cos2_angle([1.0, 0.0], [0.0, 1.0]), 0.0)

    def test_in_unit_interval(self):
        """Values stay in [0, 1]."""
        gi, gj = random_pairs(8, 200)
        values = [cos2_angle(a, b) for a, b in zip(gi, gj)]
        self.assertTrue(all(0.0 <= v <= 1.0 for v in values))

    def test_errors(self):
        """Zero vectors and length mismatches are rejected."""
        with self.assertRaises(ZeroVectorError):
            cos2_angle(np.zeros(3), np.ones(3))
        with self.assertRaises(DimensionMismatchError):
            cos2_angle(np.ones(3), np.ones(4))

    def test_indicator_scale_invariance(self):
        """Scaling both channels by the same factor leaves the decision unchanged."""
        gi, gj = random_pairs(9, 1000)
        for a, b in zip(gi, gj):
            self.assertEqual(qd_indicator(a, b, 1.0, 1.0), qd_indicator(8.0 * a, 8.0 * b, 1.0, 1.0))

    def test_indicator_orthogonal(self):
        """Orthogonal channels are never quasi-degraded."""
        self.assertFalse(qd_indicator([1.0, 0.0], [0.0, 1.0], 1.0, 1.0))

    def test_indicator_parallel(self):
        """Parallel channels are quasi-degraded exactly when ||g_i|| >= ||g_j||."""
        g = np.array([1.0, 1j, 0.5])
        self.assertTrue(qd_indicator(2.0 * g, g, 1.0, 1.0))
        self.assertFalse(qd_indicator(g, 2.0 * g, 1.0, 1.0))

    def test_indicator_zero_vector(self):
        """A zero channel is an error."""
        with self.assertRaises(ZeroVectorError):
            qd_indicator(np.zeros(2), np.ones(2), 1.0, 1.0)


class TestScenario(unittest.TestCase):
    """Test cases for QdScenario construction."""

    def test_table_defaults(self):
        """User i at theta_1 with gain beta_delta, user j at theta_1 + theta_delta."""
        s = QdScenario.from_table_defaults(k_db=10.0, beta_delta=25.0, theta_delta_deg=5.0)
        self.assertAlmostEqual(s.user_i.beta, 25.0)
        self.assertAlmostEqual(s.user_j.beta, 1.0)
        self.assertAlmostEqual(s.user_i.theta, math.radians(30.0), places=14)
        self.assertAlmostEqual(s.user_j.theta, math.radians(35.0), places=14)
        self.assertAlmostEqual(s.user_i.k_factor, 10.0, places=12)
        self.assertAlmostEqual(s.beta_delta, 25.0)

    def test_antenna_mismatch(self):
        """Both users need the same array."""
        with self.assertRaises(ValueError):
            QdScenario(user_i=ChannelParams(beta=1.0, k_factor=1.0, theta=0.0, num_antennas=4),
                       user_j=ChannelParams(beta=1.0, k_factor=1.0, theta=0.0, num_antennas=3))

    def test_shape_too_small(self):
        """N = 2 with K = 0 gives power shape 2, which is not accepted."""
        p = ChannelParams(beta=1.0, k_factor=0.0, theta=0.2, num_antennas=2)
        s = QdScenario(user_i=p, user_j=p.model_copy(update={"theta": 0.5}))
        with self.assertRaises(ShapeTooSmallError):
            qd_surrogates(s)
        with self.assertRaises(ShapeTooSmallError):
            qd_prob_quadrature(s)

    def test_surrogate_roles(self):
        """Xi = W/S and Theta = V/W."""
        sur = qd_surrogates(QdScenario.from_table_defaults(5.0, 10.0, 10.0))
        self.assertEqual(sur.xi.numerator, sur.w)
        self.assertEqual(sur.xi.denominator, sur.s)
        self.assertEqual(sur.theta.numerator, sur.v)
        self.assertEqual(sur.theta.denominator, sur.w)
        self.assertAlmostEqual(sur.w.mean(), 40.0, places=10)
        self.assertAlmostEqual(sur.s.mean(), 4.0, places=10)


class TestQuadratureRoute(unittest.TestCase):
    """Test cases for the quadrature QD probability."""

    def test_result_fields(self):
        """Probability in [0, 1] with route diagnostics."""
        result = qd_prob_quadrature(QdScenario.from_table_defaults(5.0, 25.0, 10.0))
        self.assertEqual(result.method, "quadrature")
        self.assertGreaterEqual(result.probability, 0.0)
        self.assertLessEqual(result.probability, 1.0)
        self.assertGreaterEqual(result.quadrature_error_bound, 0.0)
        self.assertLess(result.quadrature_error_bound, 1e-6)
        self.assertGreaterEqual(result.theta_tail_mass, 0.0)
        self.assertLessEqual(result.theta_tail_mass, 1.0)
        self.assertFalse(result.fallback_used)

    def test_scale_invariance(self):
        """Multiplying both path-loss gains by the same factor leaves P_QD unchanged."""
        for k_db, beta_delta, theta_delta in ((0.0, 5.0, 10.0), (6.0, 25.0, 5.0), (10.0, 100.0, 10.0)):
            s = QdScenario.from_table_defaults(k_db, beta_delta, theta_delta)
            base = qd_prob_quadrature(s).probability
            scaled = qd_prob_quadrature(s.scaled(7.0)).probability
            self.assertAlmostEqual(base, scaled, delta=1e-6)

    def test_stronger_user_i_helps(self):
        """A larger gain ratio makes quasi-degradation more likely."""
        low = qd_prob_quadrature(QdScenario.from_table_defaults(5.0, 5.0, 10.0)).probability
        high = qd_prob_quadrature(QdScenario.from_table_defaults(5.0, 25.0, 10.0)).probability
        self.assertGreater(high, low)

    def test_against_surrogate_sampling(self):
        """
        Sampling the surrogates themselves reproduces the quadrature value:
        Theta = V/W1 and Xi = W2/S with independent draws, truncated at Theta <= 1.
        """
        s = QdScenario.from_table_defaults(5.0, 25.0, 10.0)
        sur = qd_surrogates(s)
        rng = np.random.default_rng(31)
        n = 400000
        theta = sur.v.sample(rng, size=n) / sur.w.sample(rng, size=n)
        xi = sur.w.sample(rng, size=n) / sur.s.sample(rng, size=n)
        inside = theta <= 1.0
        hits = np.zeros(n, dtype=bool)
        hits[inside] = q_threshold(theta[inside], s.r_i, s.r_j) <= xi[inside]
        p_hat = float(np.mean(hits))
        std_error = math.sqrt(p_hat * (1.0 - p_hat) / n)
        expected = qd_prob_quadrature(s).probability
        self.assertLess(abs(p_hat - expected), 4.0 * std_error + 1e-3)

    def test_truncation_caps_probability(self):
        """The truncated value never exceeds the retained mass; the renormalized one divides by it."""
        for k_db, beta_delta, theta_delta in ((0.0, 5.0, 10.0), (4.0, 25.0, 10.0), (10.0, 100.0, 5.0)):
            with self.subTest(k_db=k_db, beta_delta=beta_delta, theta_delta=theta_delta):
                result = qd_prob_quadrature(QdScenario.from_table_defaults(k_db, beta_delta, theta_delta))
                retained = 1.0 - result.theta_tail_mass
                self.assertLessEqual(result.probability, retained + 1e-8)
                self.assertAlmostEqual(result.renormalized_probability,
                                       min(1.0, result.raw_value / retained), places=12)
                self.assertGreaterEqual(result.renormalized_probability, result.probability)

    def test_renormalized_at_high_k(self):
        """At 10 dB, beta_delta = 100 and 5 degrees, 30% of Theta's mass lies above one."""
        result = qd_prob_quadrature(QdScenario.from_table_defaults(10.0, 100.0, 5.0))
        self.assertAlmostEqual(result.theta_tail_mass, 0.3004, delta=5e-4)
        self.assertAlmostEqual(result.probability, 0.6996, delta=5e-4)
        self.assertGreater(result.renormalized_probability, 0.999)


class TestSeriesRoute(unittest.TestCase):
    """Test cases for the series QD probability."""

    def test_agrees_with_quadrature(self):
        """Twenty convergent scenarios agree with the quadrature route within 1e-3."""
        for k_db in (0.0, 1.0, 2.0, 3.0):
            for beta_delta in (0.1, 0.2, 0.3, 0.4, 0.5):
                with self.subTest(k_db=k_db, beta_delta=beta_delta):
                    s = QdScenario.from_table_defaults(k_db, beta_delta, 10.0)
                    series = qd_prob_series(s)
                    quadrature = qd_prob_quadrature(s)
                    self.assertEqual(series.method, "series")
                    self.assertGreater(series.series_terms_used, 0)
                    self.assertAlmostEqual(series.probability, quadrature.probability, delta=1e-3)
                    self.assertAlmostEqual(series.renormalized_probability, quadrature.renormalized_probability,
                                           delta=2e-3)

    def test_divergent_regime(self):
        """beta_delta >= 1 makes tW/tS >= 1 and the series is reported divergent."""
        s = QdScenario.from_table_defaults(5.0, 5.0, 10.0)
        with self.assertRaises(SeriesDivergenceError) as ctx:
            qd_prob_series(s, max_terms=60)
        self.assertGreaterEqual(ctx.exception.ratio, 1.0)

    def test_fallback_to_quadrature(self):
        """With fallback the quadrature value is returned and flagged."""
        s = QdScenario.from_table_defaults(5.0, 5.0, 10.0)
        result = qd_prob_series(s, max_terms=60, fallback_to_quadrature=True)
        self.assertTrue(result.fallback_used)
        self.assertEqual(result.method, "quadrature")
        self.assertAlmostEqual(result.probability, qd_prob_quadrature(s).probability, places=12)

    def test_printed_form_is_flagged(self):
        """The printed-form variant runs and marks its result."""
        result = qd_prob_series(QdScenario.from_table_defaults(2.0, 0.3, 10.0), printed_form=True)
        self.assertTrue(result.printed_form)
        self.assertEqual(result.method, "series")


class TestPairwiseBound(unittest.TestCase):
    """Test cases for the pairwise bound with more than two users."""

    def setUp(self):
        """Set up test fixtures."""
        self.users = [ChannelParams.from_degrees(beta=b, k_db=5.0, theta_deg=t)
                      for b, t in ((25.0, 30.0), (5.0, 40.0), (1.0, 50.0))]

    def test_unordered_sum(self):
        """Three users give three pairs; the sum is reported unclamped."""
        bound = pairwise_lower_bound(self.users, [1.0] * 3, pair_probability=lambda s: 0.4)
        self.assertEqual(len(bound.pairs), 3)
        self.assertEqual([(p.i, p.j) for p in bound.pairs], [(0, 1), (0, 2), (1, 2)])
        self.assertAlmostEqual(bound.value, 1.2, places=12)
        self.assertTrue(bound.exceeds_one)

    def test_ordered_sum(self):
        """Ordered counting gives six pairs."""
        bound = pairwise_lower_bound(self.users, [1.0] * 3, pair_probability=lambda s: 0.4, ordered=True)
        self.assertEqual(len(bound.pairs), 6)
        self.assertAlmostEqual(bound.value, 2.4, places=12)

    def test_default_pair_probability(self):
        """Without a callback each pair uses the quadrature route."""
        bound = pairwise_lower_bound(self.users[:2], [1.0, 1.0])
        scenario = QdScenario(user_i=self.users[0], user_j=self.users[1])
        self.assertAlmostEqual(bound.value, qd_prob_quadrature(scenario).probability, places=12)
        self.assertFalse(bound.exceeds_one)

    def test_errors(self):
        """At least two users and one rate per user."""
        with self.assertRaises(DomainError):
            pairwise_lower_bound(self.users[:1], [1.0])
        with self.assertRaises(DimensionMismatchError):
            pairwise_lower_bound(self.users, [1.0, 1.0])


if __name__ == '__main__':
    unittest.main()
