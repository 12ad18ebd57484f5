"""MISO Rician channel model: sampling, per-entry moments and the power surrogate."""

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import stats

from analysis.dist import GammaSurrogate, squared_gaussian_surrogate, sum_match
from analysis.exceptions import DomainError

# A channel vector is a 1-D complex numpy array of length N.
ChannelVector = np.ndarray


def db_to_linear(value_db: float) -> float:
    """Convert a power ratio from dB to linear scale."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear power ratio to dB (-inf for 0)."""
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


class ChannelParams(BaseModel):
    """
    One user's channel description.

    Attributes:
        beta: Linear path-loss gain, > 0
        k_factor: Rician factor, linear, >= 0 (math.inf for pure line of sight)
        theta: Azimuth of the line-of-sight path in radians, in (-pi/2, pi/2]
        num_antennas: Antenna count N of the uniform linear array, >= 2
    """

    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0, allow_inf_nan=False)
    k_factor: float = Field(ge=0)
    theta: float = Field(allow_inf_nan=False)
    num_antennas: int = Field(default=4, ge=2)

    @field_validator("theta")
    @classmethod
    def _check_theta(cls, value: float) -> float:
        # Degree conversion of 90 may land an ulp above pi/2.
        if math.pi / 2 < value <= math.pi / 2 + 1e-12:
            return math.pi / 2
        if not -math.pi / 2 < value <= math.pi / 2:
            raise ValueError(f"theta must lie in (-pi/2, pi/2], got {value}")
        return value

    @classmethod
    def from_degrees(cls, beta: float, k_db: float, theta_deg: float,
                     num_antennas: int = 4) -> "ChannelParams":
        """Build params from a Rician factor in dB and an azimuth in degrees."""
        return cls(
            beta=beta,
            k_factor=db_to_linear(k_db),
            theta=math.radians(theta_deg),
            num_antennas=num_antennas,
        )

    @property
    def los_fraction(self) -> float:
        """K/(K+1), the share of beta carried by the line-of-sight path."""
        if math.isinf(self.k_factor):
            return 1.0
        return self.k_factor / (self.k_factor + 1.0)

    @property
    def nlos_fraction(self) -> float:
        """1/(K+1), the share of beta carried by scattering."""
        if math.isinf(self.k_factor):
            return 0.0
        return 1.0 / (self.k_factor + 1.0)


def phases(p: ChannelParams) -> np.ndarray:
    """Per-antenna phases n*pi*sin(theta) for n = 0..N-1."""
    return np.arange(p.num_antennas) * math.pi * math.sin(p.theta)


def steering_vector(p: ChannelParams) -> ChannelVector:
    """Half-wavelength ULA steering vector, entry n = exp(-i n pi sin(theta))."""
    return np.exp(-1j * phases(p))


def entry_moments(p: ChannelParams, n: int) -> Tuple[float, float, float]:
    """
    Means of the real and imaginary parts of g_n and their shared variance.

    Args:
        p: Channel parameters
        n: Antenna index, 0 <= n < N

    Returns:
        Tuple (mean_re, mean_im, var_component)

    Raises:
        IndexError: If n is out of range
    """
    if not 0 <= n < p.num_antennas:
        raise IndexError(f"antenna index {n} out of range for N={p.num_antennas}")
    amplitude = math.sqrt(p.beta * p.los_fraction)
    phi = n * math.pi * math.sin(p.theta)
    return amplitude * math.cos(phi), -amplitude * math.sin(phi), p.beta * p.nlos_fraction / 2.0


def sample(p: ChannelParams, rng: np.random.Generator, size: Optional[int] = None) -> ChannelVector:
    """
    Draw channel realizations g = sqrt(beta)(sqrt(1/(K+1)) h + sqrt(K/(K+1)) a).

    Args:
        p: Channel parameters
        rng: Random stream, owned by the caller
        size: None for one vector of shape (N,), else a batch of shape (size, N)

    Returns:
        Complex array
    """
    shape = (p.num_antennas,) if size is None else (size, p.num_antennas)
    los = math.sqrt(p.los_fraction) * steering_vector(p)
    if p.nlos_fraction == 0.0:
        return np.broadcast_to(math.sqrt(p.beta) * los, shape).copy()
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    return math.sqrt(p.beta) * (math.sqrt(p.nlos_fraction) * h + los)


def mean_and_cov(p: ChannelParams) -> Tuple[np.ndarray, float]:
    """Mean vector sqrt(beta K/(K+1)) a and the isotropic covariance scale beta/(K+1)."""
    return math.sqrt(p.beta * p.los_fraction) * steering_vector(p), p.beta * p.nlos_fraction


def power_surrogate(p: ChannelParams) -> GammaSurrogate:
    """
    Gamma surrogate of the channel power ||g||^2.

    Each of the 2N real components is fitted as a squared Gaussian and the
    fits are combined by second-order moment matching.

    Raises:
        DomainError: For a pure line-of-sight channel (deterministic power)
    """
    if p.nlos_fraction == 0.0:
        raise DomainError("Channel power is deterministic for infinite K",
                          parameter="k_factor", value=p.k_factor)
    parts = []
    for n in range(p.num_antennas):
        mean_re, mean_im, var = entry_moments(p, n)
        parts.append(squared_gaussian_surrogate(mean_re, var))
        parts.append(squared_gaussian_surrogate(mean_im, var))
    return sum_match(parts)


def exact_power_distribution(p: ChannelParams):
    """
    Exact law of ||g||^2 as a frozen scipy distribution.

    K = 0 gives Gamma(N, beta); otherwise ||g||^2 is beta/(2(K+1)) times a
    non-central chi-square with 2N degrees of freedom and noncentrality 2KN.
    """
    if p.k_factor == 0:
        return stats.gamma(a=p.num_antennas, scale=p.beta)
    if p.nlos_fraction == 0.0:
        raise DomainError("Channel power is deterministic for infinite K",
                          parameter="k_factor", value=p.k_factor)
    return stats.ncx2(
        df=2 * p.num_antennas,
        nc=2.0 * p.k_factor * p.num_antennas,
        scale=p.beta * p.nlos_fraction / 2.0,
    )


def stream_for(seed: int, *path: int) -> np.random.Generator:
    """
    Counter-seeded random stream for one task.

    The stream depends only on (seed, *path), never on which worker runs
    the task or in what order.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *path])))


def as_channel_vector(z, name: str = "z") -> ChannelVector:
    """
    Validate and convert to a finite 1-D complex vector.

    Raises:
        DomainError: For non 1-D or non-finite input
    """
    vec = np.asarray(z, dtype=complex)
    if vec.ndim != 1 or vec.size == 0:
        raise DomainError("Channel vector must be a nonempty 1-D array", parameter=name, value=vec.shape)
    if not np.all(np.isfinite(vec)):
        raise DomainError("Channel vector has non-finite entries", parameter=name)
    return vec
