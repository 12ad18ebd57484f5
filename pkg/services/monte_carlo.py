"""
Monte-Carlo oracle for the QD probability and the moment estimators that
check each gamma approximation.

Trials are split into fixed-size chunks; chunk c always draws from
stream_for(seed, c) and returns per-trial statistics, which are concatenated
in chunk order. Results are therefore identical for any worker count.
"""

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from analysis.channel import ChannelParams, as_channel_vector, sample, stream_for
from analysis.exceptions import DomainError, ZeroVectorError
from analysis.qd import QdScenario, cos2_angle, q_threshold
from utils.logging_config import get_logger

logger = get_logger(__name__)

MIN_SAMPLES = 1000
DEFAULT_CHUNK_SIZE = 10000


class McEstimate(BaseModel):
    """Sample mean with its standard error."""

    model_config = ConfigDict(frozen=True)

    value: float
    std_error: float = Field(ge=0.0)
    n_samples: int = Field(ge=1)
    seed: int


class MomentEstimate(BaseModel):
    """Sample mean and variance with their standard errors."""

    model_config = ConfigDict(frozen=True)

    mean: float
    var: float = Field(ge=0.0)
    mean_std_error: float = Field(ge=0.0)
    var_std_error: float = Field(ge=0.0)
    n_samples: int = Field(ge=1)
    seed: int


class ToyReport(BaseModel):
    """QD quantities of a single channel pair."""

    theta: float
    q_threshold: float
    xi: float
    quasi_degraded: bool
    dpc_power: float
    dpc_power_sin_squared: float


def chunk_plan(n: int, chunk_size: int) -> List[Tuple[int, int]]:
    """(chunk index, trials in chunk) covering n trials."""
    if chunk_size < 1:
        raise DomainError("chunk_size must be positive", parameter="chunk_size", value=chunk_size)
    return [(c, min(chunk_size, n - start)) for c, start in enumerate(range(0, n, chunk_size))]


def _check_samples(n: int) -> None:
    if n < MIN_SAMPLES:
        raise DomainError(f"At least {MIN_SAMPLES} Monte-Carlo samples are required", parameter="n", value=n)


def run_chunks(chunk_fn: Callable[[int, int, int], np.ndarray], n: int, seed: int,
               chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> np.ndarray:
    """
    Evaluate chunk_fn(seed, chunk_index, size) over the chunk plan and
    concatenate the per-trial arrays in chunk order.

    chunk_fn must be picklable (a module-level function or a partial of one)
    when workers > 1.
    """
    plan = chunk_plan(n, chunk_size)
    seeds = [seed] * len(plan)
    indices = [c for c, _ in plan]
    sizes = [size for _, size in plan]
    if workers <= 1 or len(plan) == 1:
        parts = list(map(chunk_fn, seeds, indices, sizes))
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(plan))) as pool:
            parts = list(pool.map(chunk_fn, seeds, indices, sizes))
    return np.concatenate(parts)


def _powers(g: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", g.real, g.real) + np.einsum("ij,ij->i", g.imag, g.imag)


def _pair_statistics(s: QdScenario, seed: int, chunk: int, size: int):
    rng = stream_for(seed, chunk)
    gi = sample(s.user_i, rng, size)
    gj = sample(s.user_j, rng, size)
    inner = np.einsum("ij,ij->i", gj.conj(), gi)
    return gi, gj, inner, _powers(gi), _powers(gj)


def _qd_chunk(s: QdScenario, seed: int, chunk: int, size: int) -> np.ndarray:
    _, _, inner, power_i, power_j = _pair_statistics(s, seed, chunk, size)
    theta = np.clip(np.abs(inner) ** 2 / (power_i * power_j), 0.0, 1.0)
    indicator = np.zeros(size, dtype=bool)
    positive = theta > 0.0
    indicator[positive] = q_threshold(theta[positive], s.r_i, s.r_j) <= power_i[positive] / power_j[positive]
    return indicator


def _quadform_chunk(s: QdScenario, seed: int, chunk: int, size: int) -> np.ndarray:
    _, _, inner, _, power_j = _pair_statistics(s, seed, chunk, size)
    return np.abs(inner) ** 2 / power_j


def _power_chunk(p: ChannelParams, seed: int, chunk: int, size: int) -> np.ndarray:
    return _powers(sample(p, stream_for(seed, chunk), size))


def _projector_trace_chunk(p: ChannelParams, seed: int, chunk: int, size: int) -> np.ndarray:
    g = sample(p, stream_for(seed, chunk), size)
    power = _powers(g)
    # trace of g g^H / ||g||^2, summed entry by entry
    return np.sum(np.abs(g) ** 2 / power[:, None], axis=1)


def _projector_sum_chunk(p: ChannelParams, seed: int, chunk: int, size: int) -> np.ndarray:
    g = sample(p, stream_for(seed, chunk), size)
    u = g / np.sqrt(_powers(g))[:, None]
    return np.einsum("ti,tj->ij", u, u.conj())[None, :, :]


def _mean_estimate(values: np.ndarray, seed: int) -> McEstimate:
    n = values.shape[0]
    return McEstimate(
        value=float(np.mean(values)),
        std_error=float(np.std(values, ddof=1) / math.sqrt(n)),
        n_samples=n,
        seed=seed,
    )


def _moment_estimate(values: np.ndarray, seed: int) -> MomentEstimate:
    n = values.shape[0]
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1))
    m4 = float(np.mean((values - mean) ** 4))
    return MomentEstimate(
        mean=mean,
        var=var,
        mean_std_error=math.sqrt(var / n),
        var_std_error=math.sqrt(max(m4 - var * var, 0.0) / n),
        n_samples=n,
        seed=seed,
    )


def estimate_qd_prob(s: QdScenario, n: int, seed: int,
                     chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> McEstimate:
    """
    Empirical QD probability over n independent channel pairs.

    Args:
        s: Scenario
        n: Number of trials, >= 1000
        seed: Master seed
        chunk_size: Trials per random-stream chunk
        workers: Worker processes (does not change the result)

    Returns:
        McEstimate with binomial standard error sqrt(p(1-p)/n)
    """
    _check_samples(n)
    indicators = run_chunks(functools.partial(_qd_chunk, s), n, seed, chunk_size, workers)
    p = int(np.count_nonzero(indicators)) / n
    logger.debug(f"QD Monte-Carlo: p={p:.6g} over {n} trials")
    return McEstimate(value=p, std_error=math.sqrt(p * (1.0 - p) / n), n_samples=n, seed=seed)


def empirical_power_moments(p: ChannelParams, n: int, seed: int,
                            chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> MomentEstimate:
    """Sample mean and variance of ||g||^2."""
    _check_samples(n)
    return _moment_estimate(run_chunks(functools.partial(_power_chunk, p), n, seed, chunk_size, workers), seed)


def empirical_projector_trace(p: ChannelParams, n: int, seed: int,
                              chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> McEstimate:
    """Sample mean of tr(Pi_g); every realization has trace 1 up to round-off."""
    _check_samples(n)
    return _mean_estimate(run_chunks(functools.partial(_projector_trace_chunk, p), n, seed, chunk_size, workers), seed)


def empirical_outer_trace(p: ChannelParams, n: int, seed: int,
                          chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> McEstimate:
    """Sample mean of tr(g g^H) = ||g||^2, to compare with tr(E[g g^H]) = N beta."""
    _check_samples(n)
    return _mean_estimate(run_chunks(functools.partial(_power_chunk, p), n, seed, chunk_size, workers), seed)


def empirical_mean_projector(p: ChannelParams, n: int, seed: int,
                             chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> np.ndarray:
    """Sample mean of Pi_g as an N x N matrix."""
    _check_samples(n)
    sums = run_chunks(functools.partial(_projector_sum_chunk, p), n, seed, chunk_size, workers)
    return np.sum(sums, axis=0) / n


def empirical_quadform_moments(s: QdScenario, n: int, seed: int,
                               chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> MomentEstimate:
    """Sample mean and variance of Q_{Pi_{g_j}}(g_i) over independent pairs."""
    _check_samples(n)
    return _moment_estimate(run_chunks(functools.partial(_quadform_chunk, s), n, seed, chunk_size, workers), seed)


def dpc_power_from_stats(power_i: float, power_j: float, theta: float, r_i: float, r_j: float,
                         sin_squared: bool = False) -> float:
    """
    DPC power r_j/||g_j||^2 + (r_i/||g_i||^2)(1+r_j)/(1+r_j sin(Theta)).

    sin(Theta) takes Theta (a squared cosine) in radians as written. With
    sin_squared the squared sine of the channel angle, 1 - Theta, is used
    instead; that reading is not the canonical one.
    """
    if not (power_i > 0 and power_j > 0):
        raise ZeroVectorError("Channel powers must be positive", parameter="power", value=(power_i, power_j))
    factor = (1.0 - theta) if sin_squared else math.sin(theta)
    return r_j / power_j + (r_i / power_i) * (1.0 + r_j) / (1.0 + r_j * factor)


def dpc_power(gi, gj, r_i: float, r_j: float, sin_squared: bool = False) -> float:
    """DPC power of a channel pair; see dpc_power_from_stats."""
    vi = as_channel_vector(gi, name="gi")
    vj = as_channel_vector(gj, name="gj")
    theta = cos2_angle(vi, vj)
    return dpc_power_from_stats(float(np.vdot(vi, vi).real), float(np.vdot(vj, vj).real),
                                theta, r_i, r_j, sin_squared)


def toy_example_report(gi, gj, r_i: float, r_j: float) -> ToyReport:
    """Theta, Q(Theta), Xi, the QD decision and the DPC power for one pair."""
    vi = as_channel_vector(gi, name="gi")
    vj = as_channel_vector(gj, name="gj")
    theta = cos2_angle(vi, vj)
    power_i = float(np.vdot(vi, vi).real)
    power_j = float(np.vdot(vj, vj).real)
    xi = power_i / power_j
    threshold = q_threshold(theta, r_i, r_j) if theta > 0 else math.inf
    return ToyReport(
        theta=theta,
        q_threshold=threshold,
        xi=xi,
        quasi_degraded=threshold <= xi,
        dpc_power=dpc_power_from_stats(power_i, power_j, theta, r_i, r_j),
        dpc_power_sin_squared=dpc_power_from_stats(power_i, power_j, theta, r_i, r_j, sin_squared=True),
    )
