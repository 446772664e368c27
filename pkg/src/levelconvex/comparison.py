"""Model trigonometric functions of the constant-curvature space forms.

For a sectional curvature ``K`` the comparison sine is

    sin_K(t) = sin(sqrt(K) t) / sqrt(K)      K > 0
             = t                             K = 0
             = sinh(sqrt(-K) t) / sqrt(-K)   K < 0

and ``cos_K``, ``cot_K``, ``tan_K`` are derived from it.  All functions
accept scalars or numpy arrays for ``t``.
"""

import numpy as np


class CurvatureDomainError(ValueError):
    """Raised when ``cot_k``/``tan_k`` is evaluated where ``sin_k`` vanishes."""


def _check_curvature(K):
    K = float(K)
    if not np.isfinite(K):
        raise ValueError(f"curvature must be finite, got {K!r}")
    return K


def sin_k(K, t):
    K = _check_curvature(K)
    t = np.asarray(t, dtype=float)
    if K > 0:
        s = np.sqrt(K)
        out = np.sin(s * t) / s
    elif K < 0:
        s = np.sqrt(-K)
        out = np.sinh(s * t) / s
    else:
        out = t.copy()
    return out[()] if out.ndim == 0 else out


def cos_k(K, t):
    """Derivative of :func:`sin_k` in ``t``."""
    K = _check_curvature(K)
    t = np.asarray(t, dtype=float)
    if K > 0:
        out = np.cos(np.sqrt(K) * t)
    elif K < 0:
        out = np.cosh(np.sqrt(-K) * t)
    else:
        out = np.ones_like(t)
    return out[()] if out.ndim == 0 else out


def cot_k(K, t):
    """Logarithmic derivative of :func:`sin_k`, ``cos_k / sin_k``.

    Only defined for ``t > 0`` (and ``t < pi/sqrt(K)`` when ``K > 0``);
    anything else raises :class:`CurvatureDomainError`.
    """
    K = _check_curvature(K)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise CurvatureDomainError("cot_k requires t > 0")
    if K > 0 and np.any(t >= np.pi / np.sqrt(K)):
        raise CurvatureDomainError("cot_k requires t < pi/sqrt(K) for K > 0")
    return cos_k(K, t) / sin_k(K, t)


def tan_k(K, t):
    """Reciprocal of :func:`cot_k`, i.e. ``sin_k / cos_k``."""
    return 1.0 / cot_k(K, t)
