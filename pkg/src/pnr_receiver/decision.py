"""MAP decisions over PNR outcomes and the resulting error probability."""
from __future__ import annotations

import numpy as np

from .model import CountDistribution, Hypothesis, Priors, ReceiverConfig
from .photostats import count_distribution

_SLACK = 1e-12


def _check_pair(dist_h0: CountDistribution, dist_h1: CountDistribution):
    if dist_h0.resolution != dist_h1.resolution:
        raise ValueError(f"resolution mismatch: m={dist_h0.m} vs m={dist_h1.m}")


def map_decide(k: int, dist_h0: CountDistribution, dist_h1: CountDistribution, priors: Priors) -> Hypothesis:
    """Hypothesis with the larger prior-weighted likelihood at outcome ``k``; ties go to H1."""
    _check_pair(dist_h0, dist_h1)
    if isinstance(k, bool) or int(k) != k or not 0 <= k <= dist_h0.m:
        raise ValueError(f"outcome {k!r} outside 0..{dist_h0.m}")
    w0 = priors.p_h0 * dist_h0[int(k)]
    w1 = priors.p_h1 * dist_h1[int(k)]
    return Hypothesis.H0 if w0 > w1 else Hypothesis.H1


def decision_table(dist_h0: CountDistribution, dist_h1: CountDistribution, priors: Priors) -> np.ndarray:
    """Decided hypothesis index for every outcome 0..m, as an int array."""
    _check_pair(dist_h0, dist_h1)
    w0 = priors.p_h0 * dist_h0.probs
    w1 = priors.p_h1 * dist_h1.probs
    return np.where(w0 > w1, int(Hypothesis.H0), int(Hypothesis.H1))


def error_from_probs(probs_h0, probs_h1, priors: Priors):
    """Bayes error ``1 - sum_k max_h prior_h P(k|h)`` for (stacks of) outcome vectors.

    The complement is evaluated as ``sum_k min_h prior_h P(k|h)``, which is the
    same quantity because the prior-weighted outcome probabilities sum to one,
    but stays accurate when the error is far below machine epsilon.
    """
    w0 = priors.p_h0 * np.asarray(probs_h0)
    w1 = priors.p_h1 * np.asarray(probs_h1)
    return np.minimum(w0, w1).sum(axis=-1)


def error_probability(config: ReceiverConfig) -> float:
    """Minimum-error probability of the MAP rule for ``config``.

    For equal priors this is ``1 - 1/2 sum_k max{P(k|H0), P(k|H1)}``.
    """
    d0 = count_distribution(config, Hypothesis.H0)
    d1 = count_distribution(config, Hypothesis.H1)
    p = float(error_from_probs(d0.probs, d1.probs, config.priors))
    bound = min(config.priors.p_h0, config.priors.p_h1)
    if not -_SLACK <= p <= bound + _SLACK:
        raise ArithmeticError(f"error probability {p!r} outside [0, {bound}]; outcome pmfs are inconsistent")
    return min(max(p, 0.0), 0.5)
