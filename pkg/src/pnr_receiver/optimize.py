"""Global optimization of the displacement amplitude.

The error landscape in beta has roughly ``m`` local minima separated by kinks
where the MAP decision for some outcome flips, so gradient root-finding is
unreliable. We scan a grid in ``beta^2``, refine every grid valley (and every
nulling displacement) with a golden-section search and keep the best
refined candidate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decision import error_from_probs
from .model import Alphabet, AlphabetKind, Hypothesis, NoiseModel, Priors, PnrResolution, ReceiverConfig
from .photostats import count_probabilities, detected_means

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizationResult:
    beta_opt: float
    p_error_min: float
    candidates: tuple  # (beta, p_error) for every refined local minimum
    bracket: tuple  # (beta_lo, beta_hi)
    degenerate: bool = False

    @property
    def beta_sq_opt(self) -> float:
        return self.beta_opt * self.beta_opt


def _config(alpha, m, noise, alphabet_kind, priors, **kw) -> ReceiverConfig:
    return ReceiverConfig(
        alphabet=Alphabet(alphabet_kind, alpha),
        resolution=PnrResolution(m),
        noise=noise,
        priors=priors if priors is not None else Priors(),
        **kw,
    )


def error_vs_beta(config: ReceiverConfig, betas) -> np.ndarray:
    """Error probability of ``config`` evaluated at each displacement in ``betas``."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    n0, n1 = detected_means(config, betas)
    args = (config.m, config.noise.p_ap, config.afterpulse_mode, config.cutoff)
    p0 = count_probabilities(n0, *args)
    p1 = count_probabilities(n1, *args)
    return error_from_probs(p0, p1, config.priors)


def landscape(alpha: float, m: int, noise: NoiseModel, beta_grid, *,
              alphabet_kind=AlphabetKind.BPSK, priors: Priors | None = None, **config_kw):
    """List of ``(beta, p_error)`` over ``beta_grid``."""
    beta_grid = np.asarray(beta_grid, dtype=float)
    if np.any(beta_grid < 0):
        raise ValueError("displacement grid values must be >= 0")
    cfg = _config(alpha, m, noise, alphabet_kind, priors, **config_kw)
    values = error_vs_beta(cfg, beta_grid)
    return list(zip(beta_grid.tolist(), values.tolist()))


def _golden(f, lo: float, hi: float, tol: float):
    """Golden-section minimum of ``f`` on [lo, hi] to bracket width ``tol``."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _valleys(values: np.ndarray) -> list:
    """Indices of grid points no higher than both neighbours (one per plateau)."""
    n = len(values)
    out = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        left_ok = i == 0 or values[i - 1] > values[i]
        right_ok = j == n - 1 or values[j + 1] > values[i]
        if left_ok and right_ok:
            out.append(i)
        i = j + 1
    return out


def _nulling_points(cfg: ReceiverConfig) -> list:
    """Displacements minimizing a hypothesis' displaced mean (``beta = xi * a``).

    With perfect visibility and no darks the nulled state is exact vacuum and the
    error has a needle-shaped dip there, narrower than any practical grid.
    """
    alphabet, xi = cfg.alphabet, cfg.noise.xi
    out = []
    for h in Hypothesis:
        a = abs(alphabet.amplitude(h))
        if a > 0 and not (alphabet.kind is AlphabetKind.BPSK and h is Hypothesis.H1):
            out.append(xi * a)
    return out


def default_bracket(alpha: float, m: int, margin: float = 2.5) -> tuple:
    return 0.0, math.sqrt(alpha * alpha + margin * (m + 1))


def optimize_displacement(alpha: float, m: int, noise: NoiseModel, *,
                          alphabet_kind=AlphabetKind.BPSK, priors: Priors | None = None,
                          margin: float = 2.5, grid_points: int | None = None,
                          tol: float = 1e-8, **config_kw) -> OptimizationResult:
    """Globally minimize the error probability over the displacement ``beta``.

    Parameters
    ----------
    alpha : float
        Signal amplitude (mean photon number ``alpha**2``).
    m : int
        PNR resolution.
    noise : NoiseModel
        Imperfections shared with the analytic error model.
    margin : float
        Bracket is ``beta^2 in [0, alpha^2 + margin * (m + 1)]``.
    grid_points : int, optional
        Coarse grid size, at least ``50 * (m + 1)``; default ``max(50 (m+1), 400)``.
    tol : float
        Final golden-section bracket width in ``beta``.

    Returns
    -------
    OptimizationResult
        Best displacement plus every refined local minimum. For ``alpha = 0``
        with BPSK the landscape is flat; the smallest positive grid displacement
        is returned with ``degenerate=True``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    n = max(50 * (m + 1), 400 if grid_points is None else grid_points)
    lo, hi = default_bracket(alpha, m, margin)
    beta_grid = np.sqrt(np.linspace(lo * lo, hi * hi, n))
    cfg = _config(alpha, m, noise, alphabet_kind, priors, **config_kw)
    values = error_vs_beta(cfg, beta_grid)

    # identical hypotheses: the landscape is 1/2 up to rounding
    if alpha == 0 or np.ptp(values) <= 1e-15:
        return OptimizationResult(float(beta_grid[1]), float(values[1]),
                                  ((float(beta_grid[1]), float(values[1])),), (lo, hi), degenerate=True)

    def f(b):
        return float(error_vs_beta(cfg, b)[0])

    candidates = []
    for i in _valleys(values):
        a, b = beta_grid[max(i - 1, 0)], beta_grid[min(i + 1, n - 1)]
        x, fx = _golden(f, a, b, tol)
        # the grid point itself may sit on a kink that beats the interior search
        if values[i] < fx:
            x, fx = beta_grid[i], values[i]
        candidates.append((float(x), float(fx)))
    step = beta_grid[1] - beta_grid[0] if n > 1 else hi - lo
    for b0 in _nulling_points(cfg):
        if lo <= b0 <= hi:
            x, fx = _golden(f, max(lo, b0 - step), min(hi, b0 + step), tol)
            f0 = f(b0)
            if f0 <= fx:
                x, fx = b0, f0
            near = [c for c in candidates if abs(c[0] - x) < step]
            if near and min(c[1] for c in near) <= fx:
                continue
            candidates = [c for c in candidates if c not in near] + [(float(x), float(fx))]
    if not candidates:
        raise RuntimeError("no displacement bracket contains a minimum")
    candidates.sort()
    beta_opt, p_min = min(candidates, key=lambda c: (c[1], c[0]))
    return OptimizationResult(beta_opt, p_min, tuple(candidates), (lo, hi))


def beta_curve(alpha_sq_grid, m: int, noise: NoiseModel, **kw):
    """``(alpha_sq, beta_opt / alpha, p_error)`` rows, optimizing each point independently.

    No warm start: carrying the previous optimum forward would follow a stale
    local minimum straight through a jump.
    """
    grid = np.asarray(alpha_sq_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("alpha_sq grid must be sorted ascending")
    rows = []
    for a2 in grid:
        alpha = math.sqrt(a2)
        res = optimize_displacement(alpha, m, noise, **kw)
        ratio = res.beta_opt / alpha if alpha > 0 else math.nan
        rows.append((float(a2), ratio, res.p_error_min))
    return rows


def find_jumps(curve, threshold: float = 0.05) -> list:
    """Midpoints in ``alpha_sq`` where the ratio changes by more than ``threshold`` between neighbours."""
    jumps = []
    for (a0, r0, _), (a1, r1, _) in zip(curve, curve[1:]):
        if abs(r1 - r0) > threshold:
            jumps.append(0.5 * (a0 + a1))
    return jumps
