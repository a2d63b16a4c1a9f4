"""Monte Carlo receiver: sample photon counts, apply the MAP rule, estimate error rates.

Random numbers come from numpy's Philox4x64 counter-based generator. Trials are
split into fixed-size blocks and block ``b`` of a run with seed ``s`` draws
from ``Philox(SeedSequence([s, b]))``, so an estimate depends only on
``(config, n_trials, seed)`` and not on the number of worker threads.
Bit-reproducibility additionally assumes the same numpy release, since numpy
may change its sampling algorithms between versions.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .decision import decision_table
from .model import Hypothesis, Priors, ReceiverConfig
from .photostats import count_distribution, detected_means

BLOCK_SIZE = 1 << 16


def make_rng(seed: int, block: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


@dataclass(frozen=True)
class ErrorEstimate:
    p_hat: float
    trials: int
    sigma: float
    seed: int
    n_h1: int = 0  # trials in which H1 was sent

    def __post_init__(self):
        if self.trials <= 0:
            raise ValueError("trials must be positive")
        if not 0.0 <= self.p_hat <= 1.0 or self.sigma < 0:
            raise ValueError(f"invalid estimate p_hat={self.p_hat}, sigma={self.sigma}")


def _cascade(primary: np.ndarray, p_ap: float, rng: np.random.Generator) -> np.ndarray:
    # each new click triggers one more with probability p_ap, until a generation is empty
    total = primary.copy()
    generation = primary
    while p_ap > 0 and generation.any():
        generation = rng.binomial(generation, p_ap)
        total += generation
    return total


def sample_outcomes(config: ReceiverConfig, hypotheses, rng: np.random.Generator) -> np.ndarray:
    """PNR outcome (0..m) for each entry of ``hypotheses`` (array of 0/1)."""
    hypotheses = np.asarray(hypotheses, dtype=np.int64)
    means = np.array(detected_means(config), dtype=float)
    primary = rng.poisson(means[hypotheses])
    total = _cascade(primary, config.noise.p_ap, rng)
    return np.minimum(total, config.m)


def sample_counts(config: ReceiverConfig, hypothesis: Hypothesis, rng: np.random.Generator) -> int:
    """Single PNR outcome drawn under ``hypothesis`` with cascaded afterpulsing."""
    return int(sample_outcomes(config, [int(Hypothesis(hypothesis))], rng)[0])


def _run_block(config: ReceiverConfig, table: np.ndarray, n: int, seed: int, block: int) -> tuple:
    rng = make_rng(seed, block)
    sent = (rng.random(n) < config.priors.p_h1).astype(np.int64)
    outcomes = sample_outcomes(config, sent, rng)
    errors = int(np.count_nonzero(table[outcomes] != sent))
    return errors, int(sent.sum())


def run_trials(config: ReceiverConfig, n_trials: int, seed: int, *, threads: int = 1,
               block_size: int = BLOCK_SIZE, decision_priors: Priors | None = None) -> ErrorEstimate:
    """Estimate the error rate of the MAP receiver over ``n_trials`` simulated shots.

    The decision table comes from the analytic distributions of ``config``
    (with its configured afterpulse mode) while the counts are always sampled
    from the exact cascade model. Hypotheses are drawn from ``config.priors``;
    ``decision_priors`` arms the MAP rule with different priors.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    d0 = count_distribution(config, Hypothesis.H0)
    d1 = count_distribution(config, Hypothesis.H1)
    table = decision_table(d0, d1, decision_priors or config.priors)
    sizes = [block_size] * (n_trials // block_size)
    if n_trials % block_size:
        sizes.append(n_trials % block_size)
    jobs = list(enumerate(sizes))

    def work(job):
        b, n = job
        return _run_block(config, table, n, seed, b)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    errors = sum(r[0] for r in results)
    n_h1 = sum(r[1] for r in results)
    p_hat = errors / n_trials
    return ErrorEstimate(p_hat, n_trials, math.sqrt(p_hat * (1 - p_hat) / n_trials), int(seed), n_h1)


# Largest per-run trial counts used at high power, by PNR resolution.
_MAX_TRIALS = {1: 100_000, 2: 500_000, 3: 3_000_000, 4: 8_000_000}


@dataclass(frozen=True)
class RunPlan:
    """Trials per run as a function of mean photon number, and the number of runs.

    ``trials_by_power`` is a tuple of ``(alpha_sq_lo, alpha_sq_hi, trials)``
    half-open ranges; the first match wins and the last entry covers
    everything above the listed ranges.
    """

    trials_by_power: tuple
    runs: int = 5

    def __post_init__(self):
        if not self.trials_by_power:
            raise ValueError("trials_by_power must not be empty")
        if any(int(t) < 1 for *_, t in self.trials_by_power):
            raise ValueError("every trial count must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    def trials_for(self, alpha_sq: float) -> int:
        for lo, hi, trials in self.trials_by_power:
            if lo <= alpha_sq < hi:
                return int(trials)
        return int(self.trials_by_power[-1][2])

    @classmethod
    def uniform(cls, trials: int, runs: int = 5) -> "RunPlan":
        return cls(((0.0, math.inf, int(trials)),), runs)

    @classmethod
    def default_for(cls, m: int, runs: int = 5) -> "RunPlan":
        """1e5 trials per run up to ``alpha_sq = 1``, rising geometrically to the
        resolution's maximum from ``alpha_sq = 4`` on."""
        top = _MAX_TRIALS.get(m, _MAX_TRIALS[4]) if m >= 1 else _MAX_TRIALS[1]
        edges = [0.0, 1.0, 2.0, 3.0, 4.0]
        counts = np.geomspace(100_000, top, len(edges))
        ranges = [(lo, hi, int(round(c, -3))) for lo, hi, c in zip(edges, edges[1:] + [math.inf], counts)]
        return cls(tuple(ranges), runs)


@dataclass(frozen=True)
class ExperimentPoint:
    config: ReceiverConfig
    estimates: tuple  # one ErrorEstimate per run
    mean: float
    std: float  # sample standard deviation across runs
    pooled_sigma: float  # binomial sigma of the pooled estimate


def run_experiment(plan: RunPlan, configs, base_seed: int, *, seed_stride: int = 1,
                   threads: int = 1) -> list:
    """Repeat ``run_trials`` ``plan.runs`` times per config.

    Run ``r`` uses seed ``base_seed + r * seed_stride``; ``seed_stride=0``
    repeats one seed (a determinism check). Error bars are the sample standard
    deviation across runs; the pooled binomial sigma is reported alongside.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("need at least one config")
    out = []
    for cfg in configs:
        n = plan.trials_for(cfg.alphabet.alpha_sq)
        ests = tuple(run_trials(cfg, n, base_seed + r * seed_stride, threads=threads) for r in range(plan.runs))
        p = np.array([e.p_hat for e in ests])
        mean = float(p.mean())
        std = float(p.std(ddof=1)) if len(p) > 1 else 0.0
        total = n * len(ests)
        out.append(ExperimentPoint(cfg, ests, mean, std, math.sqrt(mean * (1 - mean) / total)))
    return out
