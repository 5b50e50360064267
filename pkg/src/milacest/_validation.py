"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np


class SingularNetworkError(np.linalg.LinAlgError):
    """Raised when ``Y/Y0 + I`` is numerically singular."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver hits its iteration cap."""


class ConfigError(ValueError):
    """Invalid experiment or system configuration.

    ``field`` names the offending configuration entry.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(name, f"expected a positive integer, got {value!r}")
    if value < 1:
        raise ConfigError(name, f"must be >= 1, got {value}")
    return int(value)


def check_positive_float(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a positive number, got {value!r}") from None
    if not np.isfinite(value) or value <= 0:
        raise ConfigError(name, f"must be finite and > 0, got {value}")
    return value


def check_coefficient(eps, name="eps"):
    """Correlation coefficients live in ``[0, 1)``."""
    eps = float(eps)
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"{name} must lie in [0, 1), got {eps}")
    return eps


def check_matrix(a, name, shape=None, dtype=complex):
    """Return ``a`` as a finite 2-D array, optionally checking its shape."""
    a = np.asarray(a, dtype=dtype)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if shape is not None and a.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def check_batch(a, name, trailing_shape):
    """Accept a single matrix or a stack of matrices.

    Returns the input as a 3-D complex array together with a flag telling the
    caller whether the leading batch axis was added here (and should be
    dropped again on output).
    """
    a = np.asarray(a, dtype=complex)
    trailing_shape = tuple(trailing_shape)
    squeeze = a.ndim == len(trailing_shape)
    if squeeze:
        a = a[np.newaxis]
    if a.ndim != len(trailing_shape) + 1 or a.shape[1:] != trailing_shape:
        raise ValueError(
            f"{name} must have shape {trailing_shape} or (n,) + {trailing_shape}, "
            f"got {np.shape(a)[int(squeeze):]}"
        )
    return a, squeeze


def check_hermitian(r, name="r", atol=1e-9):
    r = check_matrix(r, name)
    if r.shape[0] != r.shape[1]:
        raise ValueError(f"{name} must be square, got {r.shape}")
    asym = np.max(np.abs(r - r.conj().T)) if r.size else 0.0
    if asym > atol:
        raise ValueError(f"{name} is not Hermitian (max asymmetry {asym:.3e})")
    return r
