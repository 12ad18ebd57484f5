"""
Quasi-degradation (QD) of a two-user NOMA pair.

A pair decoded in the order (i, j) is quasi-degraded when Q(Theta) <= Xi, with
Theta the squared cosine between the channel vectors and Xi = ||g_i||^2/||g_j||^2.
The analytic routes replace ||g_i||^2, ||g_j||^2 and Q_{Pi_{g_j}}(g_i) with gamma
surrogates W, S and V, so that Xi ~ W/S and Theta ~ V/W are beta-prime ratios.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from analysis.channel import ChannelParams, as_channel_vector, db_to_linear, power_surrogate
from analysis.dist import BetaPrimeSurrogate, GammaSurrogate
from analysis.exceptions import (
    DimensionMismatchError,
    DomainError,
    SeriesConvergenceError,
    SeriesDivergenceError,
    ShapeTooSmallError,
    ZeroVectorError,
)
from analysis.quadform import eval_quadform, projector, theta_numerator_surrogate
from analysis.specfn import QuadratureSpec, integrate, integrate_with_error
from utils.logging_config import get_logger, log_with_context

logger = get_logger(__name__)

# Consecutive growing terms after which the series is declared divergent.
DIVERGENCE_WINDOW = 8
# Largest log-magnitude of a series term before it is reported as infinite.
MAX_LOG_TERM = 700.0


class QdScenario(BaseModel):
    """Two users decoded in the fixed order (i, j) with linear rate thresholds."""

    model_config = ConfigDict(frozen=True)

    user_i: ChannelParams
    user_j: ChannelParams
    r_i: float = Field(default=1.0, gt=0, allow_inf_nan=False)
    r_j: float = Field(default=1.0, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _same_array(self) -> "QdScenario":
        if self.user_i.num_antennas != self.user_j.num_antennas:
            raise ValueError("user_i and user_j must have the same number of antennas")
        return self

    @classmethod
    def from_table_defaults(cls, k_db: float, beta_delta: float, theta_delta_deg: float,
                            theta_1_deg: float = 30.0, num_antennas: int = 4,
                            r_i: float = 1.0, r_j: float = 1.0, beta_j: float = 1.0) -> "QdScenario":
        """
        Scenario on the default simulation grid: both users share K, user i sits
        at theta_1 with gain beta_delta * beta_j, user j at theta_1 + theta_delta.
        """
        k_factor = db_to_linear(k_db)
        return cls(
            user_i=ChannelParams(beta=beta_delta * beta_j, k_factor=k_factor,
                                 theta=math.radians(theta_1_deg), num_antennas=num_antennas),
            user_j=ChannelParams(beta=beta_j, k_factor=k_factor,
                                 theta=math.radians(theta_1_deg + theta_delta_deg), num_antennas=num_antennas),
            r_i=r_i,
            r_j=r_j,
        )

    @property
    def beta_delta(self) -> float:
        """Path-loss ratio beta_i / beta_j."""
        return self.user_i.beta / self.user_j.beta

    def scaled(self, factor: float) -> "QdScenario":
        """Same scenario with both path-loss gains multiplied by factor."""
        return self.model_copy(update={
            "user_i": self.user_i.model_copy(update={"beta": self.user_i.beta * factor}),
            "user_j": self.user_j.model_copy(update={"beta": self.user_j.beta * factor}),
        })


class QdSurrogates(BaseModel):
    """Gamma surrogates W, S, V and the ratios Xi = W/S and Theta = V/W built from them."""

    model_config = ConfigDict(frozen=True)

    w: GammaSurrogate
    s: GammaSurrogate
    v: GammaSurrogate
    xi: BetaPrimeSurrogate
    theta: BetaPrimeSurrogate


class QdAnalyticResult(BaseModel):
    """Analytic QD probability with route diagnostics."""

    model_config = ConfigDict(frozen=True)

    probability: float = Field(ge=0.0, le=1.0)
    method: str = Field(pattern="^(quadrature|series)$")
    raw_value: float
    series_terms_used: int = Field(default=0, ge=0)
    quadrature_error_bound: float = Field(default=0.0, ge=0.0)
    theta_tail_mass: float = Field(default=0.0, ge=0.0, le=1.0)
    renormalized_probability: float = Field(default=0.0, ge=0.0, le=1.0)
    printed_form: bool = False
    fallback_used: bool = False


def _clamp_probability(value: float) -> float:
    return min(1.0, max(0.0, value))


def _renormalized(raw: float, tail: float) -> float:
    """raw / (1 - tail): the probability conditioned on Theta <= 1."""
    mass = 1.0 - tail
    if not mass > 0.0:
        return 0.0
    return _clamp_probability(raw / mass)


def q_threshold(theta_val: Union[float, np.ndarray], r_i: float, r_j: float) -> Union[float, np.ndarray]:
    """
    QD threshold Q(Theta) = (1+r_i)/Theta - r_i Theta/(1+r_j(1-Theta))^2.

    Args:
        theta_val: Squared cosine in (0, 1], scalar or array
        r_i: Rate threshold of user i, > 0
        r_j: Rate threshold of user j, > 0

    Returns:
        Q(Theta), same shape as theta_val

    Raises:
        DomainError: If any theta_val lies outside (0, 1]
    """
    t = np.asarray(theta_val, dtype=float)
    if not np.all((t > 0.0) & (t <= 1.0)):
        raise DomainError("q_threshold requires theta in (0, 1]", parameter="theta_val", value=theta_val)
    value = (1.0 + r_i) / t - r_i * t / (1.0 + r_j * (1.0 - t)) ** 2
    return value if value.ndim else float(value)


def _squared_norm(vec: np.ndarray, name: str) -> float:
    power = float(np.vdot(vec, vec).real)
    if power == 0.0:
        raise ZeroVectorError("Channel vector must be nonzero", parameter=name)
    return power


def _pair(gi, gj):
    vi = as_channel_vector(gi, name="gi")
    vj = as_channel_vector(gj, name="gj")
    if vi.shape != vj.shape:
        raise DimensionMismatchError("Channel vectors differ in length", parameter="dimension",
                                     value=(vi.shape, vj.shape))
    return vi, vj, _squared_norm(vi, "gi"), _squared_norm(vj, "gj")


def cos2_angle(gi, gj) -> float:
    """
    Squared cosine |g_j^H g_i|^2 / (||g_i||^2 ||g_j||^2), clipped to [0, 1].

    Raises:
        ZeroVectorError: If either vector is zero
    """
    vi, vj, pi, pj = _pair(gi, gj)
    inner = np.vdot(vj, vi)
    return min(1.0, max(0.0, float((inner.real ** 2 + inner.imag ** 2) / (pi * pj))))


def cos2_angle_projector(gi, gj) -> float:
    """Squared cosine evaluated as Q_{Pi_{g_j}}(g_i) / ||g_i||^2."""
    vi, vj, pi, _ = _pair(gi, gj)
    return min(1.0, max(0.0, eval_quadform(projector(vj), vi) / pi))


def qd_indicator(gi, gj, r_i: float, r_j: float) -> bool:
    """True when the pair (g_i, g_j) is quasi-degraded for decoding order (i, j)."""
    vi, vj, pi, pj = _pair(gi, gj)
    theta = cos2_angle(vi, vj)
    if theta == 0.0:
        # Q diverges for orthogonal channels
        return False
    return q_threshold(theta, r_i, r_j) <= pi / pj


def qd_surrogates(s: QdScenario) -> QdSurrogates:
    """
    Gamma surrogates of a scenario: W for ||g_i||^2, S for ||g_j||^2 and V for
    Q_{Pi_{g_j}}(g_i).

    Raises:
        ShapeTooSmallError: If either power surrogate has shape <= 2
    """
    w = power_surrogate(s.user_i)
    if not w.shape > 2:
        raise ShapeTooSmallError(f"Power surrogate of user i has shape {w.shape:.6g} <= 2", shape=w.shape)
    s_power = power_surrogate(s.user_j)
    if not s_power.shape > 2:
        raise ShapeTooSmallError(f"Power surrogate of user j has shape {s_power.shape:.6g} <= 2", shape=s_power.shape)
    v = theta_numerator_surrogate(s.user_i, s.user_j)
    return QdSurrogates(
        w=w,
        s=s_power,
        v=v,
        xi=BetaPrimeSurrogate(numerator=w, denominator=s_power),
        theta=BetaPrimeSurrogate(numerator=v, denominator=w),
    )


def _theta_mode(theta: BetaPrimeSurrogate) -> Optional[float]:
    a_v, a_w = theta.numerator.shape, theta.denominator.shape
    if a_v <= 1.0:
        return None
    return (a_v - 1.0) / (a_w + 1.0) * theta.numerator.scale / theta.denominator.scale


def qd_prob_quadrature(s: QdScenario, spec: QuadratureSpec = QuadratureSpec()) -> QdAnalyticResult:
    """
    QD probability as the integral over (0, 1) of P[Xi >= Q(t)] f_Theta(t) dt.

    Theta's surrogate lives on [0, inf); the mass above 1 is dropped without
    renormalization and reported as theta_tail_mass. renormalized_probability
    divides by the retained mass instead.

    Raises:
        ShapeTooSmallError: If a power surrogate has shape <= 2
        QuadratureBudgetError: If the subdivision budget is exhausted
    """
    sur = qd_surrogates(s)

    def integrand(t: float) -> float:
        return sur.xi.sf(q_threshold(t, s.r_i, s.r_j)) * sur.theta.pdf(t)

    mode = _theta_mode(sur.theta)
    raw, error_bound = integrate_with_error(integrand, 0.0, 1.0, spec,
                                            breakpoints=None if mode is None else [mode])
    tail = float(sur.theta.sf(1.0))
    logger.debug(f"Quadrature route: P={raw:.9g}, error bound={error_bound:.3g}, tail mass={tail:.3g}")
    return QdAnalyticResult(
        probability=_clamp_probability(raw),
        method="quadrature",
        raw_value=raw,
        quadrature_error_bound=error_bound,
        theta_tail_mass=_clamp_probability(tail),
        renormalized_probability=_renormalized(raw, tail),
    )


def series_inner_integral(k: int, r_i: float, r_j: float, alpha_s: float,
                          weight: Optional[Callable[[float], float]] = None,
                          spec: QuadratureSpec = QuadratureSpec()) -> float:
    """
    G(k) = integral over (0, 1) of Q(t)^-(k + alpha_s) w(t) dt.

    Args:
        k: Series index, >= 0
        r_i: Rate threshold of user i
        r_j: Rate threshold of user j
        alpha_s: Shape of the surrogate S
        weight: w(t); None integrates Q^-(k + alpha_s) alone
        spec: Quadrature tolerances

    Returns:
        Value of the integral
    """
    exponent = k + alpha_s

    if weight is None:
        def f(t: float) -> float:
            return q_threshold(t, r_i, r_j) ** (-exponent)
    else:
        def f(t: float) -> float:
            return q_threshold(t, r_i, r_j) ** (-exponent) * weight(t)

    return integrate(f, 0.0, 1.0, spec)


def _log_series_coefficient(k: int, a: float, b: float, ratio: float) -> float:
    """ln |(a)_k (b)_k / ((b+1)_k k!) ratio^k|, using (b)_k/(b+1)_k = b/(b+k)."""
    return (special.gammaln(a + k) - special.gammaln(a) - special.gammaln(k + 1.0)
            + math.log(b) - math.log(b + k) + k * math.log(ratio))


def series_term(sur: QdSurrogates, k: int, r_i: float, r_j: float,
                printed_form: bool = False, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """
    Term k of the series expansion of the QD probability.

    The default form expands P[Xi >= Q] through the 2F1 series and keeps
    f_Theta inside each inner integral:

        (tW/tS)^aS / (aS B(aW, aS)) * c_k (-tW/tS)^k * G_weighted(k)

    printed_form evaluates (1 + tW/tV)^-(aV+aW) c_k (-tW/tS)^k G(k) with an
    unweighted inner integral and a constant in place of f_Theta. It does not
    agree with the quadrature route and is kept for comparison only.
    """
    a_w, t_w = sur.w.shape, sur.w.scale
    a_s, t_s = sur.s.shape, sur.s.scale
    a_v, t_v = sur.v.shape, sur.v.scale
    ratio = t_w / t_s
    log_coefficient = _log_series_coefficient(k, a_w + a_s, a_s, ratio)
    sign = -1.0 if k % 2 else 1.0
    if printed_form:
        log_prefactor = -(a_v + a_w) * math.log1p(t_w / t_v)
        inner = series_inner_integral(k, r_i, r_j, a_s, None, spec)
    else:
        log_prefactor = (a_s * math.log(ratio) - math.log(a_s) - float(special.betaln(a_w, a_s)))
        inner = series_inner_integral(k, r_i, r_j, a_s, sur.theta.pdf, spec)
    log_magnitude = log_prefactor + log_coefficient
    if log_magnitude > MAX_LOG_TERM:
        # only reachable for tW/tS >= 1; the divergence watchdog sees the inf
        return sign * math.inf
    return sign * math.exp(log_magnitude) * inner


def qd_prob_series(s: QdScenario, max_terms: int = 400, tol: float = 1e-10,
                   spec: QuadratureSpec = QuadratureSpec(), printed_form: bool = False,
                   fallback_to_quadrature: bool = False) -> QdAnalyticResult:
    """
    QD probability by the alternating series with ratio tW/tS.

    The series converges for tW/tS < 1 and stops once |term| < tol*|sum|. For
    tW/tS >= 1 convergence is not accepted: terms are summed under a growth
    watchdog and divergence is reported (or the quadrature route is used
    when fallback_to_quadrature is set).

    Raises:
        SeriesDivergenceError: For tW/tS >= 1 without fallback
        SeriesConvergenceError: If max_terms is exhausted for tW/tS < 1
    """
    sur = qd_surrogates(s)
    ratio = sur.w.scale / sur.s.scale
    divergent_regime = ratio >= 1.0

    try:
        total = 0.0
        previous = math.inf
        growth = 0
        for k in range(max_terms):
            term = series_term(sur, k, s.r_i, s.r_j, printed_form, spec)
            total += term
            magnitude = abs(term)
            if not divergent_regime:
                if magnitude <= tol * abs(total):
                    logger.debug(f"Series route converged after {k + 1} terms: P={total:.9g}")
                    tail = float(sur.theta.sf(1.0))
                    return QdAnalyticResult(
                        probability=_clamp_probability(total),
                        method="series",
                        raw_value=total,
                        series_terms_used=k + 1,
                        theta_tail_mass=_clamp_probability(tail),
                        renormalized_probability=_renormalized(total, tail),
                        printed_form=printed_form,
                    )
            else:
                growth = growth + 1 if magnitude > previous else 0
                if growth >= DIVERGENCE_WINDOW or not math.isfinite(total):
                    raise SeriesDivergenceError("QD series terms grow without bound", ratio=ratio, terms=k + 1)
            previous = magnitude

        if divergent_regime:
            raise SeriesDivergenceError("QD series did not settle within the term budget",
                                        ratio=ratio, terms=max_terms)
        raise SeriesConvergenceError("QD series did not reach its tolerance", terms=max_terms, partial_sum=total)

    except SeriesDivergenceError as e:
        if not fallback_to_quadrature:
            raise
        log_with_context(logger, logging.WARNING, f"Series route diverged, using quadrature: {e}",
                         method="series", error_type=type(e).__name__)
        result = qd_prob_quadrature(s, spec)
        return result.model_copy(update={"fallback_used": True, "printed_form": printed_form})


class PairTerm(BaseModel):
    """One decoding-ordered pair in the pairwise bound."""

    i: int
    j: int
    probability: float


class PairwiseBound(BaseModel):
    """Sum of pairwise QD probabilities, reported without clamping."""

    value: float
    exceeds_one: bool
    pairs: List[PairTerm]


def pairwise_lower_bound(users: Sequence[ChannelParams], rates: Sequence[float],
                         pair_probability: Optional[Callable[[QdScenario], float]] = None,
                         ordered: bool = False,
                         spec: QuadratureSpec = QuadratureSpec()) -> PairwiseBound:
    """
    Pairwise QD bound for more than two users.

    By default every unordered pair is counted once with decoding order
    (i, j), i < j, so users are expected stronger-first. ordered=True counts
    each ordered pair i != j.

    Args:
        users: Channel parameters, at least two
        rates: Rate threshold per user
        pair_probability: P_QD for one scenario; defaults to the quadrature route
        ordered: Count ordered instead of unordered pairs
        spec: Quadrature tolerances for the default pair probability

    Returns:
        PairwiseBound with the raw sum, an exceeds-one flag and per-pair terms
    """
    if len(users) < 2:
        raise DomainError("pairwise_lower_bound needs at least two users", parameter="users", value=len(users))
    if len(rates) != len(users):
        raise DimensionMismatchError("One rate per user is required", parameter="rates",
                                     value=(len(users), len(rates)))
    if pair_probability is None:
        def pair_probability(scenario: QdScenario) -> float:
            return qd_prob_quadrature(scenario, spec).probability

    pairs: List[PairTerm] = []
    for i in range(len(users)):
        for j in range(len(users)):
            if i == j or (not ordered and j < i):
                continue
            scenario = QdScenario(user_i=users[i], user_j=users[j], r_i=rates[i], r_j=rates[j])
            pairs.append(PairTerm(i=i, j=j, probability=float(pair_probability(scenario))))

    value = math.fsum(term.probability for term in pairs)
    if value > 1.0:
        log_with_context(logger, logging.WARNING, f"Pairwise QD sum {value:.6g} exceeds one", count=len(pairs))
    return PairwiseBound(value=value, exceeds_one=value > 1.0, pairs=pairs)
