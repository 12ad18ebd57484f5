"""Special functions and adaptive quadrature shared by the analytic routes."""

import math
from typing import Callable, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate as sp_integrate
from scipy import special

from analysis.exceptions import DomainError, QuadratureBudgetError, SeriesConvergenceError
from utils.config import Config
from utils.logging_config import get_logger

logger = get_logger(__name__)

# Direct series limit when neither Pfaff form has positive parameters.
DIRECT_SERIES_LIMIT = -0.5
# Partial sums above this are rescaled to keep the series finite.
RESCALE_THRESHOLD = 1e250
LOG_RESCALE = math.log(RESCALE_THRESHOLD)
MAX_LOG_VALUE = 709.0


class QuadratureSpec(BaseModel):
    """Tolerances and subdivision budget for adaptive quadrature."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-8, gt=0)
    abs_tol: float = Field(default=1e-12, ge=0)
    max_subdivisions: int = Field(default=200, ge=1)


def ln_gamma(x: float) -> float:
    """
    Natural logarithm of the gamma function.

    Args:
        x: Positive argument

    Returns:
        ln Gamma(x)

    Raises:
        DomainError: If x is not strictly positive
    """
    if not x > 0:
        raise DomainError("ln_gamma requires a positive argument", parameter="x", value=x)
    return float(special.gammaln(x))


def ln_beta(a: float, b: float) -> float:
    """Natural logarithm of the Beta function B(a, b) for a, b > 0."""
    if not (a > 0 and b > 0):
        raise DomainError("ln_beta requires positive arguments", parameter="a,b", value=(a, b))
    return float(special.betaln(a, b))


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """
    Regularized incomplete beta function I_x(a, b).

    Args:
        a: First shape, > 0
        b: Second shape, > 0
        x: Upper limit in [0, 1]

    Returns:
        I_x(a, b) in [0, 1]

    Raises:
        DomainError: Outside the preconditions
    """
    if not (a > 0 and b > 0):
        raise DomainError("reg_inc_beta requires positive shapes", parameter="a,b", value=(a, b))
    if not 0.0 <= x <= 1.0:
        raise DomainError("reg_inc_beta requires x in [0, 1]", parameter="x", value=x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return float(special.betainc(a, b, x))


def _is_nonpositive_integer(value: float) -> bool:
    return value <= 0 and float(value).is_integer()


def _hypergeometric_series(a: float, b: float, c: float, z: float,
                           rel_tol: float, max_terms: int) -> Tuple[float, float, int]:
    """
    Sum the defining power series of 2F1 term by term.

    Large partial sums are rescaled as they grow, so the result is returned
    as (mantissa, log_scale, terms) with value = mantissa * exp(log_scale).
    """
    total = 1.0
    term = 1.0
    log_scale = 0.0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if term == 0.0:
            # a or b is a nonpositive integer: the series terminated
            return total, log_scale, k + 1
        if abs(total) > RESCALE_THRESHOLD:
            total /= RESCALE_THRESHOLD
            term /= RESCALE_THRESHOLD
            log_scale += LOG_RESCALE
        next_ratio = abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2)) * z)
        if next_ratio < 1.0:
            remainder = abs(term) * next_ratio / (1.0 - next_ratio)
            if remainder <= rel_tol * abs(total):
                return total, log_scale, k + 1
    raise SeriesConvergenceError(
        f"2F1({a:.6g}, {b:.6g}; {c:.6g}; {z:.6g}) did not converge",
        terms=max_terms, partial_sum=total * math.exp(min(log_scale, MAX_LOG_VALUE))
    )


def _pfaff_form(a: float, b: float, c: float, z: float) -> Optional[Tuple[float, float, float]]:
    """
    Choose the Pfaff form to sum, or None for the direct series.

    Returns (kept, other, exponent) such that
    2F1(a,b;c;z) = (1-z)^(-exponent) * 2F1(kept, other; c; z/(z-1)).
    """
    # Polynomials are summed as they stand.
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        return None
    keep_a = (a, c - b, a)
    keep_b = (c - a, b, b)
    if _is_nonpositive_integer(c - a):
        return keep_b
    if _is_nonpositive_integer(c - b):
        return keep_a
    # z/(z-1) lies in (0, 1), so positive parameters give a series of positive terms.
    for form in (keep_a, keep_b):
        if form[0] > 0 and form[1] > 0 and c > 0:
            return form
    if z >= DIRECT_SERIES_LIMIT:
        return None
    return keep_b


def _scaled_value(log_magnitude: float, sign: float) -> float:
    if sign == 0.0:
        return 0.0
    if log_magnitude > MAX_LOG_VALUE:
        return math.copysign(math.inf, sign)
    return math.copysign(math.exp(log_magnitude), sign)


def gauss_2f1_log(a: float, b: float, c: float, z: float,
                  rel_tol: Optional[float] = None, max_terms: Optional[int] = None) -> Tuple[float, float]:
    """
    Gauss hypergeometric function as (ln |2F1(a, b; c; z)|, sign) for real z <= 0.

    Negative arguments are mapped into (0, 1) with the Pfaff transformation
    z -> z/(z-1), choosing the form whose series has positive terms. The
    direct series is summed for polynomials and, when neither form has
    positive parameters, for z >= DIRECT_SERIES_LIMIT.

    Args:
        a: First numerator parameter
        b: Second numerator parameter
        c: Denominator parameter, not a nonpositive integer
        z: Argument, z <= 0
        rel_tol: Relative size of the remaining tail at which summation stops;
            defaults to Config().hyp2f1_tol
        max_terms: Term budget; defaults to Config().hyp2f1_max_terms

    Returns:
        Tuple of (log-magnitude, sign); a zero value has sign 0 and log-magnitude -inf

    Raises:
        DomainError: If c is a nonpositive integer or z > 0
        SeriesConvergenceError: If the series fails to converge within max_terms
    """
    if _is_nonpositive_integer(c):
        raise DomainError("2F1 is undefined for nonpositive integer c", parameter="c", value=c)
    if not z <= 0.0:
        raise DomainError("gauss_2f1 supports z <= 0 only", parameter="z", value=z)
    if z == 0.0:
        return 0.0, 1.0
    if rel_tol is None or max_terms is None:
        config = Config()
        rel_tol = config.hyp2f1_tol if rel_tol is None else rel_tol
        max_terms = config.hyp2f1_max_terms if max_terms is None else max_terms

    form = _pfaff_form(a, b, c, z)
    if form is None:
        mantissa, log_scale, terms = _hypergeometric_series(a, b, c, z, rel_tol, max_terms)
        logger.debug(f"2F1 direct series: z={z:.6g}, terms={terms}")
    else:
        kept, other, exponent = form
        w = z / (z - 1.0)
        mantissa, log_scale, terms = _hypergeometric_series(kept, other, c, w, rel_tol, max_terms)
        log_scale -= exponent * math.log1p(-z)
        logger.debug(f"2F1 Pfaff series: z={z:.6g}, w={w:.6g}, terms={terms}")
    if mantissa == 0.0:
        return -math.inf, 0.0
    return math.log(abs(mantissa)) + log_scale, math.copysign(1.0, mantissa)


def gauss_2f1(a: float, b: float, c: float, z: float,
              rel_tol: Optional[float] = None, max_terms: Optional[int] = None) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0; see gauss_2f1_log."""
    log_magnitude, sign = gauss_2f1_log(a, b, c, z, rel_tol, max_terms)
    return _scaled_value(log_magnitude, sign)


def integrate(f: Callable[[float], float], lo: float, hi: float,
              spec: QuadratureSpec = QuadratureSpec(),
              breakpoints: Optional[Sequence[float]] = None) -> float:
    """Adaptive quadrature of f over (lo, hi); see integrate_with_error."""
    return integrate_with_error(f, lo, hi, spec, breakpoints)[0]


def integrate_with_error(f: Callable[[float], float], lo: float, hi: float,
                         spec: QuadratureSpec = QuadratureSpec(),
                         breakpoints: Optional[Sequence[float]] = None) -> Tuple[float, float]:
    """
    Adaptive Gauss-Kronrod quadrature of f over (lo, hi).

    The rule never evaluates the endpoints, so integrable endpoint
    singularities are admitted; an infinite upper limit is mapped internally.

    Args:
        f: Integrand, finite on the open interval
        lo: Lower limit
        hi: Upper limit, lo < hi (may be +inf)
        spec: Tolerances and subdivision budget
        breakpoints: Interior points where f peaks or kinks (finite limits only)

    Returns:
        Tuple of (estimate, absolute error bound)

    Raises:
        DomainError: If lo >= hi
        QuadratureBudgetError: If the budget is exhausted before the
            error bound max(abs_tol, rel_tol*|estimate|) is met
    """
    if not lo < hi:
        raise DomainError("integrate requires lo < hi", parameter="lo,hi", value=(lo, hi))

    points = None
    if breakpoints is not None and math.isfinite(lo) and math.isfinite(hi):
        points = sorted(x for x in breakpoints if lo < x < hi) or None

    result = sp_integrate.quad(
        f, lo, hi,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
        points=points,
    )
    estimate, error_bound = float(result[0]), float(result[1])
    if len(result) > 3:
        target = max(spec.abs_tol, spec.rel_tol * abs(estimate))
        if not error_bound <= target:
            raise QuadratureBudgetError(str(result[3]).strip(), estimate=estimate, error_bound=error_bound)
        logger.debug(f"Quadrature diagnostic ignored, error bound {error_bound:.3g} within target: {result[3]}")
    return estimate, error_bound
