"""
Moments of complex quadratic forms Q_A(z) = z^H A z.

Covariances are isotropic (scale * I) throughout, matching the Rician NLOS
component; the scalar is passed instead of a matrix.
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from analysis.channel import ChannelParams, as_channel_vector, mean_and_cov, power_surrogate, steering_vector
from analysis.dist import GammaSurrogate, gamma_from_moments, inverse_gamma_moments
from analysis.exceptions import DimensionMismatchError, DomainError, ZeroVectorError

HERMITIAN_TOL = 1e-12


class QuadFormMoments(BaseModel):
    """Mean and variance of a quadratic form."""

    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float = Field(ge=0)


def as_hermitian(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """
    Validate a square matrix that equals its conjugate transpose entrywise within tol.

    Raises:
        DomainError: If A is not square or not Hermitian
    """
    mat = np.asarray(A, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DomainError("Matrix must be square", parameter="A", value=mat.shape)
    gap = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if gap > tol * max(1.0, float(np.max(np.abs(mat)))):
        raise DomainError("Matrix is not Hermitian", parameter="A", value=gap)
    return mat


def _check_dims(A: np.ndarray, z: np.ndarray) -> None:
    if A.shape[0] != z.shape[0]:
        raise DimensionMismatchError(
            f"Matrix is {A.shape[0]}x{A.shape[1]} but vector has length {z.shape[0]}",
            parameter="dimension", value=(A.shape, z.shape),
        )


def _hermitian_form(A: np.ndarray, z: np.ndarray) -> float:
    return float(np.vdot(z, A @ z).real)


def eval_quadform(A, z) -> float:
    """
    Evaluate z^H A z for Hermitian A; the (round-off) imaginary part is dropped.

    Raises:
        DimensionMismatchError: If len(z) differs from the size of A
    """
    mat = as_hermitian(A)
    vec = as_channel_vector(z)
    _check_dims(mat, vec)
    return _hermitian_form(mat, vec)


def _prepare(A, mu, cov_scale: float) -> Tuple[np.ndarray, np.ndarray]:
    if cov_scale < 0:
        raise DomainError("Covariance scale must be non-negative", parameter="cov_scale", value=cov_scale)
    mat = as_hermitian(A)
    vec = as_channel_vector(mu, name="mu")
    _check_dims(mat, vec)
    return mat, vec


def mean_det(A, mu, cov_scale: float) -> float:
    """E[z^H A z] = tr(A Sigma) + mu^H A mu for z ~ CN(mu, cov_scale I)."""
    mat, vec = _prepare(A, mu, cov_scale)
    return cov_scale * float(np.trace(mat).real) + _hermitian_form(mat, vec)


def var_det(A, mu, cov_scale: float) -> float:
    """V[z^H A z] = tr((A Sigma)^2) + 2 mu^H A Sigma A mu for z ~ CN(mu, cov_scale I)."""
    mat, vec = _prepare(A, mu, cov_scale)
    a2 = mat @ mat
    return cov_scale ** 2 * float(np.trace(a2).real) + 2.0 * cov_scale * _hermitian_form(a2, vec)


def stoch_moments(ES, mu, cov_scale: float) -> QuadFormMoments:
    """
    Moments of z^H S z for a stochastic Hermitian S independent of z.

    Only E[S] enters:
        mean = tr(E[S] Sigma) + mu^H E[S] mu
        var  = tr(Sigma^2 E[S]^2) + 2 mu^H Sigma E[S]^2 mu
    With Sigma = cov_scale I this coincides with mean_det/var_det at A = E[S].
    """
    mat, vec = _prepare(ES, mu, cov_scale)
    es2 = mat @ mat
    mean = cov_scale * float(np.trace(mat).real) + _hermitian_form(mat, vec)
    variance = cov_scale ** 2 * float(np.trace(es2).real) + 2.0 * cov_scale * _hermitian_form(es2, vec)
    return QuadFormMoments(mean=mean, variance=max(variance, 0.0))


def expected_outer(p: ChannelParams) -> np.ndarray:
    """E[g g^H] = (beta K/(K+1)) a a^H + (beta/(K+1)) I."""
    a = steering_vector(p)
    return p.beta * p.los_fraction * np.outer(a, a.conj()) + p.beta * p.nlos_fraction * np.eye(p.num_antennas)


def expected_projector(p: ChannelParams) -> np.ndarray:
    """
    E[Pi_g] approximated as E[g g^H] * E[1/||g||^2], ignoring the dependence
    between the outer product and the inverse power.

    Raises:
        ShapeTooSmallError: If the power surrogate shape is <= 2
    """
    inverse_mean, _ = inverse_gamma_moments(power_surrogate(p))
    return expected_outer(p) * inverse_mean


def projector(g) -> np.ndarray:
    """
    Rank-one projector Pi_g = g (g^H g)^-1 g^H.

    Raises:
        ZeroVectorError: If g is the zero vector
    """
    vec = as_channel_vector(g, name="g")
    power = float(np.vdot(vec, vec).real)
    if power == 0.0:
        raise ZeroVectorError("Cannot project onto the zero vector", parameter="g")
    return np.outer(vec, vec.conj()) / power


def theta_numerator_surrogate(pi: ChannelParams, pj: ChannelParams) -> GammaSurrogate:
    """
    Gamma surrogate of Q_{Pi_{g_j}}(g_i), the numerator of the squared cosine.

    Raises:
        DimensionMismatchError: If the users have different antenna counts
        ShapeTooSmallError: If user j's power surrogate shape is <= 2
    """
    if pi.num_antennas != pj.num_antennas:
        raise DimensionMismatchError("Users must share the antenna count",
                                     parameter="num_antennas", value=(pi.num_antennas, pj.num_antennas))
    mu, cov_scale = mean_and_cov(pi)
    moments = stoch_moments(expected_projector(pj), mu, cov_scale)
    return gamma_from_moments(moments.mean, moments.variance)


def real_quadform_moments(A, mu, cov) -> QuadFormMoments:
    """
    Moments of x^T A x for a real Gaussian x ~ N(mu, cov) and symmetric A.

    mean = tr(A cov) + mu^T A mu, var = 2 tr((A cov)^2) + 4 mu^T A cov A mu
    """
    mat = np.asarray(A, dtype=float)
    sigma = np.asarray(cov, dtype=float)
    vec = np.asarray(mu, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or sigma.shape != mat.shape or vec.shape != (mat.shape[0],):
        raise DimensionMismatchError("Shapes of A, mu and cov do not agree",
                                     parameter="dimension", value=(mat.shape, vec.shape, sigma.shape))
    if not np.allclose(mat, mat.T, rtol=0.0, atol=HERMITIAN_TOL * max(1.0, float(np.max(np.abs(mat))))):
        raise DomainError("Matrix is not symmetric", parameter="A")
    a_sigma = mat @ sigma
    mean = float(np.trace(a_sigma) + vec @ mat @ vec)
    variance = float(2.0 * np.trace(a_sigma @ a_sigma) + 4.0 * vec @ a_sigma @ mat @ vec)
    return QuadFormMoments(mean=mean, variance=max(variance, 0.0))
