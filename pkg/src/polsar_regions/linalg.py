"""Complex Hermitian matrix helpers.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` with shape
``(..., q, q)``; every function here accepts a leading batch shape so the
classifier can evaluate thousands of segment/prototype pairs in one call.
Nothing assumes ``q == 3``.
"""

import numpy as np

from . import config
from .errors import (
    DimensionMismatchError,
    DomainError,
    NotPositiveDefiniteError,
    SingularMatrixError,
)


def _square(m):
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionMismatchError(f"expected (..., q, q) array, got shape {m.shape}")
    return m


def hermitize(m):
    """Return ``(m + m^H) / 2``; the result is exactly Hermitian."""
    m = _square(m)
    return (m + np.conj(np.swapaxes(m, -1, -2))) / 2


def hermitian(entries):
    """Build a Hermitian matrix (or stack of them) from ``entries``.

    The input is symmetrized, so ``out[i, j] == conj(out[j, i])`` holds
    bit-for-bit and the diagonal is real.

    Raises
    ------
    DomainError
        On non-finite entries or a negative diagonal.
    """
    m = _square(np.asarray(entries, dtype=np.complex128))
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix entries must be finite")
    m = hermitize(m)
    if np.any(np.diagonal(m, axis1=-2, axis2=-1).real < 0):
        raise DomainError("diagonal of a covariance matrix must be non-negative")
    return m


def identity(q, dtype=np.complex128):
    return np.eye(q, dtype=dtype)


def from_upper(diagonal, upper):
    """Hermitian matrix from its diagonal and row-major strict upper triangle.

    >>> from_upper([1, 2], [1j]).tolist()
    [[(1+0j), 1j], [-1j, (2+0j)]]
    """
    q = len(diagonal)
    if len(upper) != q * (q - 1) // 2:
        raise DimensionMismatchError("upper triangle has the wrong number of entries")
    m = np.zeros((q, q), dtype=np.complex128)
    m[np.diag_indices(q)] = diagonal
    iu = np.triu_indices(q, 1)
    m[iu] = upper
    m[(iu[1], iu[0])] = np.conj(np.asarray(upper, dtype=np.complex128))
    return hermitian(m)


def det(m):
    """Determinant by LU with partial pivoting; complex, returned as computed."""
    return np.linalg.det(_square(m).astype(np.complex128, copy=False))


def trace(m):
    return np.trace(_square(m), axis1=-2, axis2=-1)


def matmul(a, b):
    a, b = _square(a), _square(b)
    if a.shape[-1] != b.shape[-2]:
        raise DimensionMismatchError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def rcond(m):
    """Reciprocal 2-norm condition number; 0 for exactly singular input."""
    m = _square(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.linalg.cond(m)
    out = np.where(np.isfinite(c), 1.0 / c, 0.0)
    return out[()] if out.ndim == 0 else out


def is_singular(m, floor=config.RCOND_FLOOR):
    """Boolean mask of matrices whose reciprocal condition is below ``floor``."""
    return rcond(m) < floor


def inverse(m, floor=config.RCOND_FLOOR):
    """Inverse of a Hermitian matrix, re-Hermitianized.

    Raises
    ------
    SingularMatrixError
        If any matrix in the batch has reciprocal condition below ``floor``.
    """
    m = _square(m)
    if np.any(is_singular(m, floor)):
        raise SingularMatrixError("matrix is singular to working precision")
    return hermitize(np.linalg.inv(m))


def cholesky_hpd(m):
    """Lower-triangular ``L`` with ``L @ L^H == m``.

    Raises
    ------
    NotPositiveDefiniteError
        When a pivot is not strictly positive.
    """
    m = _square(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None


def logdet_hpd(m):
    """Log-determinant of Hermitian positive-definite matrices via Cholesky."""
    factor = cholesky_hpd(m)
    return 2.0 * np.sum(np.log(np.abs(np.diagonal(factor, axis1=-2, axis2=-1))), axis=-1)


def logabsdet(m):
    """``log|det(m)|`` for any square matrix, HPD or not (LU based)."""
    _, value = np.linalg.slogdet(_square(m))
    return value
