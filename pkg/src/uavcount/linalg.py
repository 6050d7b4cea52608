"""Small complex linear-algebra layer: Hermitian spectra, Gram products, log-determinants."""

from __future__ import annotations

import math

import numpy as np

# Relative tolerances for input validation and roundoff clamping.
HERMITIAN_RTOL = 1e-8
CLAMP_RTOL = 1e-10


class DimensionError(ValueError):
    """Raised when a matrix has the wrong shape for an operation."""


class SymmetryError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""


def _as_square(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def clamp_spectrum(values: np.ndarray) -> np.ndarray:
    """Zero out tiny negative eigenvalues caused by roundoff.

    Works on a single spectrum or a stack (last axis = eigenvalues). Values
    below ``-CLAMP_RTOL * max|value|`` are left alone so genuinely indefinite
    input is still visible to the caller.
    """
    values = np.array(values, dtype=float, copy=True)
    scale = np.max(np.abs(values), axis=-1, keepdims=True)
    tiny = (values < 0) & (values >= -CLAMP_RTOL * scale)
    values[tiny] = 0.0
    return values


def hermitian_eigenvalues(a, *, check: bool = True) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix (or a stack of them), sorted descending.

    Parameters
    ----------
    a : array_like, shape (..., M, M)
        Hermitian matrix or stack of Hermitian matrices.
    check : bool
        Verify the Hermitian property; disable inside hot Monte Carlo loops
        where the input is a Gram product by construction.

    Returns
    -------
    numpy.ndarray, shape (..., M)
        Real eigenvalues in non-increasing order, tiny negatives clamped to 0.
    """
    a = _as_square(a)
    if check:
        dev = np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0)
        ref = np.max(np.abs(a), initial=0.0)
        if dev > HERMITIAN_RTOL * max(ref, np.finfo(float).tiny):
            raise SymmetryError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    values = np.linalg.eigvalsh(a)[..., ::-1]
    return clamp_spectrum(values)


def gram(y) -> np.ndarray:
    """Return ``Y @ Y^H`` for an M x N matrix (or a stack of them)."""
    y = np.asarray(y)
    if y.ndim < 2 or y.shape[-1] < 1:
        raise DimensionError(f"expected M x N matrix with N >= 1, got shape {y.shape}")
    return y @ np.conj(np.swapaxes(y, -1, -2))


def log_det_from_spectrum(values) -> float:
    """Natural log of the product of eigenvalues; ``-inf`` if any eigenvalue is 0."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("spectrum has non-finite values")
    if np.any(values < 0):
        raise ValueError("log-determinant needs a non-negative spectrum")
    if np.any(values == 0):
        return -math.inf
    return float(np.sum(np.log(values)))


def det_from_spectrum(values) -> float:
    """Determinant as the product of eigenvalues, accumulated in the log domain.

    Raises OverflowError when the product is not representable as a float;
    use :func:`log_det_from_spectrum` in that case.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        # Signed product is still well defined for small indefinite inputs.
        sign = -1.0 if np.count_nonzero(values < 0) % 2 else 1.0
        return sign * det_from_spectrum(np.abs(values))
    logdet = log_det_from_spectrum(values)
    if logdet == -math.inf:
        return 0.0
    if logdet > math.log(np.finfo(float).max):
        raise OverflowError(f"determinant exp({logdet:.6g}) overflows; use log_det_from_spectrum")
    return math.exp(logdet)
