"""Closed-form reference limits for BPSK discrimination."""
from __future__ import annotations

import numpy as np
from scipy.special import erfc

from .model import ParameterError


def homodyne_limit(alpha, eta: float = 1.0):
    """Homodyne error ``(1 - erf(sqrt(2 eta) alpha)) / 2``; ``eta = 1`` is the QNL.

    Loss in front of an ideal homodyne detector scales the amplitude by
    ``sqrt(eta)``. ``erfc`` keeps the high-power tail accurate.
    """
    if not 0.0 < eta <= 1.0:
        raise ParameterError("eta", f"efficiency must lie in (0, 1], got {eta}")
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ParameterError("alpha", "amplitude must be >= 0")
    out = 0.5 * erfc(np.sqrt(2.0 * eta) * alpha)
    return float(out) if out.ndim == 0 else out


def helstrom_bound(alpha):
    """Helstrom minimum error ``(1 - sqrt(1 - exp(-4 alpha^2))) / 2`` for equal priors.

    Rewritten as ``e / (2 (1 + sqrt(1 - e)))`` with ``e = exp(-4 alpha^2)`` so
    that large amplitudes give ``~ e / 4`` instead of cancelling to zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ParameterError("alpha", "amplitude must be >= 0")
    x = 4.0 * alpha * alpha
    overlap = np.exp(-x)
    out = 0.5 * overlap / (1.0 + np.sqrt(-np.expm1(-x)))
    return float(out) if out.ndim == 0 else out
