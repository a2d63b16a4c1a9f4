"""Conditional photon-count statistics of the displaced PNR receiver.

The imperfection chain is applied in a fixed order::

    displaced mean (visibility) -> eta * mean + nu -> Poisson -> afterpulsing -> PNR truncation

Every pmf handled internally carries an absorbing last bin holding the mass
of all counts at or beyond the cutoff. Afterpulses only move counts upward,
so outcomes below ``m`` are exact for any cutoff ``K >= m``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .model import (
    AfterpulseMode,
    Alphabet,
    AlphabetKind,
    CountDistribution,
    Hypothesis,
    NoiseModel,
    ParameterError,
    ReceiverConfig,
)

__all__ = [
    "displaced_mean",
    "apply_efficiency_and_darks",
    "untruncated_pmf",
    "poisson_with_tail",
    "afterpulse_matrix",
    "afterpulse_transform",
    "truncate",
    "count_probabilities",
    "count_distribution",
    "detected_means",
]


def displaced_mean(alphabet: Alphabet, hypothesis: Hypothesis, beta: float, xi: float) -> float:
    """Mean photon number after the displacement, before detector losses.

    BPSK uses ``a^2 + b^2 +/- 2 xi a b`` (``+`` for H1). OOK states with
    amplitude ``a`` in {0, alpha, sqrt(2) alpha} are displaced towards zero:
    ``a^2 + b^2 - 2 xi a b``.
    """
    if beta < 0:
        raise ParameterError("beta", f"displacement must be >= 0, got {beta}")
    if not 0.0 <= xi <= 1.0:
        raise ParameterError("xi", f"visibility must lie in [0, 1], got {xi}")
    return float(_displaced_mean(alphabet, Hypothesis(hypothesis), np.float64(beta), xi))


def _displaced_mean(alphabet: Alphabet, hypothesis: Hypothesis, beta, xi: float):
    # Works on scalars and arrays of beta.
    a = abs(alphabet.amplitude(hypothesis))
    a_sq = 2.0 * alphabet.alpha_sq if (alphabet.kind is AlphabetKind.OOK_AVG and hypothesis is Hypothesis.H1) else a * a
    if alphabet.kind is AlphabetKind.BPSK and hypothesis is Hypothesis.H1:
        cross = 2.0 * xi * a * beta
    else:
        cross = -2.0 * xi * a * beta
    return np.maximum(a_sq + beta * beta + cross, 0.0)


def apply_efficiency_and_darks(mean, noise: NoiseModel):
    """Detected mean ``eta * mean + nu``: linear loss followed by additive Poisson darks."""
    if np.any(np.asarray(mean) < 0):
        raise ParameterError("mean", "photon number must be >= 0")
    return noise.eta * mean + noise.nu


def detected_means(config: ReceiverConfig, beta=None) -> tuple:
    """Detected Poisson means ``(n_h0, n_h1)`` for ``config``, optionally at other displacement(s)."""
    b = config.beta if beta is None else np.asarray(beta, dtype=float)
    xi = config.noise.xi
    return tuple(
        apply_efficiency_and_darks(_displaced_mean(config.alphabet, h, b, xi), config.noise)
        for h in (Hypothesis.H0, Hypothesis.H1)
    )


def untruncated_pmf(mean: float, k_max: int) -> np.ndarray:
    """Poisson pmf at k = 0..k_max, evaluated in the log domain."""
    if mean < 0:
        raise ParameterError("mean", f"must be >= 0, got {mean}")
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    k = np.arange(k_max + 1)
    if mean == 0:
        return (k == 0).astype(float)
    return np.exp(k * math.log(mean) - mean - special.gammaln(k + 1))


def poisson_with_tail(means, k_max: int) -> np.ndarray:
    """Poisson pmf on 0..k_max-1 plus ``P(N >= k_max)`` in the last column.

    ``means`` may be a scalar or 1-d array; the result has shape ``(..., k_max + 1)``.
    """
    mu = np.atleast_1d(np.asarray(means, dtype=float))
    k = np.arange(k_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = k * np.log(mu)[:, None] - mu[:, None] - special.gammaln(k + 1)
    # k * log(0) gives nan at k = 0; the vacuum pmf is exactly [1, 0, ...]
    logp = np.where(mu[:, None] == 0, np.where(k == 0, 0.0, -np.inf), logp)
    body = np.exp(logp)
    # Regularized lower incomplete gamma P(k_max, mu) equals P(N >= k_max) with no cancellation.
    tail = special.gammainc(k_max, mu) if k_max > 0 else np.ones_like(mu)
    out = np.concatenate([body, tail[:, None]], axis=1)
    return out[0] if np.ndim(means) == 0 else out


@lru_cache(maxsize=256)
def _afterpulse_matrix(size: int, p_ap: float, mode: AfterpulseMode) -> np.ndarray:
    last = size - 1
    T = np.zeros((size, size))
    if p_ap == 0.0:
        np.fill_diagonal(T, 1.0)
    elif mode is AfterpulseMode.PAPER_ORDER2:
        for j in range(size):
            one = j * p_ap
            two = 0.5 * j * (j + 1) * p_ap * p_ap
            if one + two > 1.0:
                # second-order expansion saturates at very high counts
                one, two = one / (one + two), two / (one + two)
            T[j, min(j + 1, last)] += one
            T[j, min(j + 2, last)] += two
            T[j, j] += 1.0 - one - two
    else:
        # j primary clicks, each starting a geometric afterpulse chain:
        # total extras ~ NegBin(j, 1 - p_ap).
        T[0, 0] = 1.0
        for j in range(1, size):
            e = np.arange(last - j)
            T[j, j:last] = stats.nbinom.pmf(e, j, 1.0 - p_ap)
            T[j, last] = stats.nbinom.sf(last - j - 1, j, 1.0 - p_ap)
    T.setflags(write=False)
    return T


def afterpulse_matrix(size: int, p_ap: float, mode: AfterpulseMode | str) -> np.ndarray:
    """Row-stochastic count transition matrix for afterpulsing on ``size`` bins.

    Row ``j`` gives the distribution of total clicks given ``j`` primary
    clicks. The last bin is absorbing: counts that would land beyond it are
    folded into it.

    PAPER_ORDER2 keeps terms up to second order in ``p_ap``: a bin with ``j``
    clicks moves ``j p_ap`` of its mass one bin up and ``C(j+1, 2) p_ap^2``
    two bins up, and keeps the remainder. For ``j = 1, 2`` this is the
    familiar ``P2 + p P1`` and ``P3 + 2p P2 + p^2 P1``.

    CASCADE is the exact branching model in which every click, primary or
    not, triggers one further click with probability ``p_ap``.
    """
    if not 0.0 <= p_ap < 1.0:
        raise ParameterError("p_ap", f"afterpulse probability must lie in [0, 1), got {p_ap}")
    return _afterpulse_matrix(int(size), float(p_ap), AfterpulseMode(mode))


def afterpulse_transform(pmf, p_ap: float, mode: AfterpulseMode | str = AfterpulseMode.PAPER_ORDER2) -> np.ndarray:
    """Apply afterpulsing to a normalized count pmf (last bin absorbing)."""
    pmf = np.asarray(pmf, dtype=float)
    total = pmf.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > 1e-9):
        raise ValueError(f"pmf must be normalized, sums to {total}")
    if p_ap == 0.0:
        return pmf.copy()
    return pmf @ afterpulse_matrix(pmf.shape[-1], p_ap, mode)


def truncate(pmf: np.ndarray, m: int) -> np.ndarray:
    """Collapse all counts >= m into the ``m+`` outcome."""
    return np.concatenate([pmf[..., :m], pmf[..., m:].sum(axis=-1, keepdims=True)], axis=-1)


def count_probabilities(means, m: int, p_ap: float = 0.0, mode=AfterpulseMode.PAPER_ORDER2, cutoff: int | None = None):
    """Vectorized outcome probabilities for detected Poisson mean(s); shape ``(..., m + 1)``."""
    K = m + 40 if cutoff is None else cutoff
    if K < m:
        raise ValueError(f"cutoff {K} is below the PNR resolution {m}")
    pmf = poisson_with_tail(means, K)
    if p_ap > 0.0:
        pmf = pmf @ afterpulse_matrix(K + 1, p_ap, mode)
    return truncate(pmf, m)


def count_distribution(config: ReceiverConfig, hypothesis: Hypothesis) -> CountDistribution:
    """Outcome distribution over {0, ..., m-1, m+} under ``hypothesis``."""
    hypothesis = Hypothesis(hypothesis)
    mean = detected_means(config)[hypothesis]
    probs = count_probabilities(
        float(mean), config.m, config.noise.p_ap, config.afterpulse_mode, config.cutoff
    )
    return CountDistribution(config.resolution, probs)
