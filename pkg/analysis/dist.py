"""Gamma-family surrogates and the moment-matching rules that build them."""

import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import special, stats

from analysis.exceptions import DomainError, ShapeTooSmallError
from analysis.specfn import MAX_LOG_VALUE, gauss_2f1_log, ln_beta, reg_inc_beta

ArrayLike = Union[float, np.ndarray]


class GammaSurrogate(BaseModel):
    """Gamma law Γ(shape, scale) standing in for a nonnegative random quantity."""

    model_config = ConfigDict(frozen=True)

    shape: float = Field(gt=0, allow_inf_nan=False)
    scale: float = Field(gt=0, allow_inf_nan=False)

    def mean(self) -> float:
        return self.shape * self.scale

    def var(self) -> float:
        return self.shape * self.scale ** 2

    def frozen(self):
        """scipy.stats frozen distribution with the same parameters."""
        return stats.gamma(a=self.shape, scale=self.scale)

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return self.frozen().pdf(x)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return self.frozen().cdf(x)

    def sf(self, x: ArrayLike) -> ArrayLike:
        return self.frozen().sf(x)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> ArrayLike:
        return rng.gamma(self.shape, self.scale, size=size)


class BetaPrimeSurrogate(BaseModel):
    """Ratio numerator/denominator of two independent gamma surrogates."""

    model_config = ConfigDict(frozen=True)

    numerator: GammaSurrogate
    denominator: GammaSurrogate

    def logpdf(self, x: ArrayLike) -> ArrayLike:
        """Log density; -inf at x = 0 unless the numerator shape is <= 1."""
        a_v, t_v = self.numerator.shape, self.numerator.scale
        a_w, t_w = self.denominator.shape, self.denominator.scale
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                special.xlogy(a_v - 1.0, x)
                - a_v * np.log(t_v) - a_w * np.log(t_w)
                - (a_v + a_w) * np.log(x / t_v + 1.0 / t_w)
                - special.betaln(a_v, a_w)
            )
        out = np.where(x < 0, -np.inf, out)
        return out if out.ndim else float(out)

    def pdf(self, x: ArrayLike) -> ArrayLike:
        out = np.exp(self.logpdf(x))
        return out if np.ndim(out) else float(out)

    def sf(self, q: ArrayLike) -> ArrayLike:
        """P[V/W >= q] through the regularized incomplete beta function."""
        a_v, t_v = self.numerator.shape, self.numerator.scale
        a_w, t_w = self.denominator.shape, self.denominator.scale
        q = np.asarray(q, dtype=float)
        with np.errstate(divide="ignore"):
            x = 1.0 / (1.0 + q * t_w / t_v)
        out = special.betainc(a_w, a_v, x)
        return out if out.ndim else float(out)

    def tail_mass(self, bound: float = 1.0) -> float:
        """Probability mass above bound (support lost to a finite truncation)."""
        return beta_prime_sf(self, bound)


def gamma_from_moments(mean: float, var: float) -> GammaSurrogate:
    """
    Fit a gamma surrogate by matching mean and variance.

    Args:
        mean: Target mean, > 0
        var: Target variance, > 0

    Returns:
        GammaSurrogate with shape mean²/var and scale var/mean

    Raises:
        DomainError: For nonpositive inputs
    """
    if not (mean > 0 and var > 0):
        raise DomainError("Moment matching requires positive mean and variance",
                          parameter="mean,var", value=(mean, var))
    return GammaSurrogate(shape=mean * mean / var, scale=var / mean)


def squared_gaussian_surrogate(mu: float, sigma2: float) -> GammaSurrogate:
    """
    Gamma surrogate for X² with X ~ N(mu, sigma2).

    Uses E[X²] = σ²+μ² and V[X²] = 2σ²(σ²+2μ²).
    """
    if not sigma2 > 0:
        raise DomainError("Gaussian variance must be positive", parameter="sigma2", value=sigma2)
    mean = sigma2 + mu * mu
    var = 2.0 * sigma2 * (sigma2 + 2.0 * mu * mu)
    return gamma_from_moments(mean, var)


def sum_match(parts: Sequence[GammaSurrogate]) -> GammaSurrogate:
    """
    Second-order moment match of a sum of independent gamma variables.

    Args:
        parts: Nonempty list of GammaSurrogate

    Returns:
        GammaSurrogate with k = (Σkθ)²/(Σkθ²), θ = (Σkθ²)/(Σkθ)
    """
    if not parts:
        raise DomainError("sum_match requires at least one surrogate", parameter="parts", value=0)
    if len(parts) == 1:
        return parts[0]
    total_mean = math.fsum(p.shape * p.scale for p in parts)
    total_var = math.fsum(p.shape * p.scale * p.scale for p in parts)
    return GammaSurrogate(shape=total_mean * total_mean / total_var, scale=total_var / total_mean)


def inverse_gamma_moments(g: GammaSurrogate) -> Tuple[float, float]:
    """
    Mean and variance of 1/Z for Z ~ Γ(k, θ).

    Raises:
        ShapeTooSmallError: When k <= 2 (the variance does not exist)
    """
    k, theta = g.shape, g.scale
    if not k > 2:
        raise ShapeTooSmallError(f"Inverse-gamma moments need shape > 2, got {k:.6g}", shape=k)
    mean = 1.0 / ((k - 1.0) * theta)
    var = 1.0 / ((k - 1.0) ** 2 * (k - 2.0) * theta ** 2)
    return mean, var


def inverse_gamma_pdf(g: GammaSurrogate, x: ArrayLike) -> ArrayLike:
    """Density of 1/Z for Z ~ Γ(k, θ)."""
    return stats.invgamma(a=g.shape, scale=1.0 / g.scale).pdf(x)


def beta_prime_pdf(bp: BetaPrimeSurrogate, x: float) -> float:
    """Density of V/W at x >= 0."""
    if x < 0:
        raise DomainError("beta_prime_pdf is supported on x >= 0", parameter="x", value=x)
    return bp.pdf(x)


def beta_prime_logpdf(bp: BetaPrimeSurrogate, x: float) -> float:
    if x < 0:
        raise DomainError("beta_prime_logpdf is supported on x >= 0", parameter="x", value=x)
    return bp.logpdf(x)


def beta_prime_sf(bp: BetaPrimeSurrogate, q: float) -> float:
    """
    Survival P[V/W >= q] = I_{1/(1+c)}(α_w, α_v), c = q·θ_w/θ_v.

    Args:
        bp: Ratio surrogate (numerator V, denominator W)
        q: Threshold >= 0 (may be +inf)

    Returns:
        Survival probability
    """
    if not q >= 0:
        raise DomainError("beta_prime_sf requires q >= 0", parameter="q", value=q)
    if q == 0:
        return 1.0
    if math.isinf(q):
        return 0.0
    c = q * bp.denominator.scale / bp.numerator.scale
    return reg_inc_beta(bp.denominator.shape, bp.numerator.shape, 1.0 / (1.0 + c))


def beta_prime_sf_hypergeometric(bp: BetaPrimeSurrogate, q: float,
                                 rel_tol: Optional[float] = None, max_terms: Optional[int] = None) -> float:
    """
    Survival P[V/W >= q] through the Gauss hypergeometric closed form

        (θ_v/(θ_w q))^{α_w} / (α_w B(α_v, α_w)) · 2F1(α_v+α_w, α_w; α_w+1; -θ_v/(θ_w q))

    The prefactor and 2F1 are combined in log space; the series budget
    defaults to the hyp2f1 keys of Config.
    """
    if not q >= 0:
        raise DomainError("beta_prime_sf_hypergeometric requires q >= 0", parameter="q", value=q)
    if q == 0:
        return 1.0
    if math.isinf(q):
        return 0.0
    a_v, t_v = bp.numerator.shape, bp.numerator.scale
    a_w, t_w = bp.denominator.shape, bp.denominator.scale
    u = t_v / (t_w * q)
    log_prefactor = a_w * math.log(u) - math.log(a_w) - ln_beta(a_v, a_w)
    log_hyp, sign = gauss_2f1_log(a_v + a_w, a_w, a_w + 1.0, -u, rel_tol=rel_tol, max_terms=max_terms)
    if sign == 0.0:
        return 0.0
    return math.copysign(math.exp(min(log_prefactor + log_hyp, MAX_LOG_VALUE)), sign)


def describe(surrogates: List[GammaSurrogate]) -> List[dict]:
    """Plain-dict view (shape, scale, mean, var) for reports and JSON bodies."""
    return [
        {"shape": g.shape, "scale": g.scale, "mean": g.mean(), "var": g.var()}
        for g in surrogates
    ]
