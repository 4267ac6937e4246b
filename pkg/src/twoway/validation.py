"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DataError, ParameterError


def check_matrix(M, name="M", *, nonnegative=False):
    """Return ``M`` as a finite 2-D float64 array.

    Raises :class:`DataError` on NaN/Inf or (optionally) negative entries.
    """
    try:
        arr = check_array(
            M,
            dtype=np.float64,
            ensure_all_finite=False,
            ensure_min_samples=1,
            ensure_min_features=1,
        )
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(f"{name} has a non-finite entry at {tuple(int(i) for i in bad)}")
    if nonnegative and np.any(arr < 0):
        bad = np.argwhere(arr < 0)[0]
        raise DataError(f"{name} has a negative entry at {tuple(int(i) for i in bad)}")
    return arr


def check_vector(v, name="v", *, length=None, positive=False):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DataError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} has non-finite entries")
    if positive and np.any(arr <= 0):
        raise DataError(f"{name} must be strictly positive")
    return arr


def check_positive_int(value, name, *, minimum=1, maximum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ParameterError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_positive_real(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise ParameterError(f"{name} must be a real number, got {value!r}") from exc
    if not np.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be positive and finite, got {value}")
    return value


def check_orthonormal(Q, name="basis", *, atol=1e-6):
    """Raise :class:`DataError` if the columns of ``Q`` are not orthonormal."""
    Q = check_matrix(Q, name)
    dev = np.abs(Q.T @ Q - np.eye(Q.shape[1])).max()
    if dev > atol:
        raise DataError(f"{name} columns are not orthonormal (Gram deviation {dev:.3g})")
    return Q


def check_labels(labels, n_samples, name="labels"):
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.shape[0] != n_samples:
        raise DataError(f"{name} must have shape ({n_samples},), got {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise DataError(f"{name} must be integers")
    arr = arr.astype(np.intp)
    if arr.size and arr.min() < 0:
        raise DataError(f"{name} must be nonnegative")
    return arr
