"""Scaled complex Wishart model: density, ML estimation and simulation.

The simulator draws circular complex Gaussian scattering vectors through the
real ``2q``-variate embedding of the covariance and averages ``L`` outer
products to form each multilook pixel.
"""

from dataclasses import dataclass
import math
import numbers

import numpy as np
from scipy.special import gammaln

from . import linalg
from .errors import (
    DomainError,
    EmptySampleError,
    NonIntegerLooksError,
    NotPositiveDefiniteError,
)


def _check_looks(looks, q):
    if not np.isfinite(looks) or looks < q:
        raise DomainError(f"number of looks must be >= q={q}, got {looks}")


@dataclass(frozen=True)
class WishartModel:
    """``W(sigma, looks)`` with ``E[Z] = sigma``.

    ``looks`` may be real (e.g. an estimated ENL of 2.97) for inference;
    simulation needs an integer.
    """

    sigma: np.ndarray
    looks: float

    def __post_init__(self):
        sigma = linalg.hermitian(self.sigma)
        linalg.cholesky_hpd(sigma)
        _check_looks(self.looks, sigma.shape[-1])
        object.__setattr__(self, "sigma", sigma)

    @property
    def q(self):
        return self.sigma.shape[-1]


@dataclass(frozen=True)
class CovarianceEstimate:
    """Sample-mean covariance of ``sample_size`` multilook pixels."""

    sigma_hat: np.ndarray
    sample_size: int
    looks: float

    def __post_init__(self):
        if int(self.sample_size) != self.sample_size or self.sample_size < 1:
            raise DomainError("sample_size must be a positive integer")
        if not self.looks > 0:
            raise DomainError("looks must be positive")
        object.__setattr__(self, "sigma_hat", linalg.hermitian(self.sigma_hat))
        object.__setattr__(self, "sample_size", int(self.sample_size))

    @property
    def q(self):
        return self.sigma_hat.shape[-1]


def log_multivariate_gamma(looks, q):
    """``log Gamma_q(L) = q(q-1)/2 log(pi) + sum_{i<q} log Gamma(L - i)``."""
    return q * (q - 1) / 2 * math.log(math.pi) + float(np.sum(gammaln(looks - np.arange(q))))


def log_density(model, z):
    """Log of the scaled complex Wishart density at ``z``."""
    z = linalg.hermitian(z)
    q, L = model.q, model.looks
    if z.shape != model.sigma.shape:
        raise DomainError("z and sigma differ in dimension")
    det_z = linalg.det(z).real
    det_s = linalg.det(model.sigma).real
    if det_z <= 0 or det_s <= 0:
        raise DomainError("determinants must be positive")
    tr = linalg.trace(linalg.inverse(model.sigma) @ z).real
    return (
        q * L * math.log(L)
        + (L - q) * math.log(det_z)
        - L * math.log(det_s)
        - log_multivariate_gamma(L, q)
        - L * tr
    )


def estimate_covariance(pixels, looks):
    """ML estimate of the covariance: the arithmetic mean of the pixels."""
    pixels = np.asarray(pixels, dtype=np.complex128)
    if pixels.ndim == 2:
        pixels = pixels[None]
    if pixels.ndim != 3 or pixels.shape[0] == 0:
        raise EmptySampleError("need at least one q x q pixel")
    return CovarianceEstimate(pixels.mean(axis=0), pixels.shape[0], looks)


def embed_real(sigma):
    """Real ``2q x 2q`` covariance of ``[Re y, Im y]`` for ``y ~ CN(0, sigma)``.

    ``0.5 * [[Re S, -Im S], [Im S, Re S]]``.
    """
    sigma = linalg.hermitian(sigma)
    re, im = sigma.real, sigma.imag
    out = 0.5 * np.block([[re, -im], [im, re]])
    try:
        np.linalg.cholesky(out)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("covariance is not positive definite") from None
    return out


def gaussian_from_normals(sigma, normals):
    """Map standard normals of shape ``(..., 2q)`` to ``CN(0, sigma)`` vectors."""
    factor = np.linalg.cholesky(embed_real(sigma))
    q = factor.shape[0] // 2
    x = np.asarray(normals, dtype=float) @ factor.T
    return x[..., :q] + 1j * x[..., q:]


def sample_gaussian_pixel(sigma, rng, size=None):
    """Draw single-look scattering vectors ``y ~ CN_q(0, sigma)``."""
    q = np.shape(sigma)[-1]
    shape = (2 * q,) if size is None else tuple(np.atleast_1d(size)) + (2 * q,)
    return gaussian_from_normals(sigma, rng.standard_normal(shape))


def multilook(vectors):
    """Average outer products over the look axis: ``(..., L, q) -> (..., q, q)``."""
    vectors = np.asarray(vectors)
    L = vectors.shape[-2]
    z = np.einsum("...li,...lj->...ij", vectors, np.conj(vectors)) / L
    return linalg.hermitize(z)


def sample_multilook(model, rng, size=None):
    """Draw ``L``-look covariance matrices from ``model``.

    Raises
    ------
    NonIntegerLooksError
        If ``model.looks`` is not a whole number.
    """
    looks = model.looks
    if not (isinstance(looks, numbers.Integral) or float(looks).is_integer()):
        raise NonIntegerLooksError(f"simulation needs an integer number of looks, got {looks}")
    looks = int(looks)
    batch = () if size is None else tuple(np.atleast_1d(size))
    y = sample_gaussian_pixel(model.sigma, rng, batch + (looks,))
    return multilook(y)
