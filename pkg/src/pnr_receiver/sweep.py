"""Parameter sweeps behind the error curves, QNL-ratio maps and robustness studies.

Every function returns plain row dictionaries with a fixed key order so the
CLI can write them straight to CSV. All sweeps are analytic.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import helstrom_bound, homodyne_limit
from .decision import error_probability
from .model import IDEAL, Alphabet, AlphabetKind, NoiseModel, PnrResolution, ReceiverConfig
from .optimize import optimize_displacement

CURVE_COLUMNS = ("alpha_sq", "m", "xi", "eta", "nu", "p_ap", "beta_opt", "p_error", "p_hom", "p_hom_adj", "p_hels")


def _pmap(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _noise_cols(noise: NoiseModel) -> dict:
    return {"xi": noise.xi, "eta": noise.eta, "nu": noise.nu, "p_ap": noise.p_ap}


def evaluate_point(alpha_sq: float, m: int, noise: NoiseModel, beta_mode: str = "opt",
                   alphabet_kind=AlphabetKind.BPSK, **kw) -> tuple:
    """``(beta, p_error)`` at one point for ``beta_mode`` in {opt, null, fixed:<value>}."""
    alpha = math.sqrt(alpha_sq)
    if beta_mode == "opt":
        res = optimize_displacement(alpha, m, noise, alphabet_kind=alphabet_kind, **kw)
        return res.beta_opt, res.p_error_min
    if beta_mode == "null":
        beta = alpha
    elif beta_mode.startswith("fixed:"):
        beta = float(beta_mode.split(":", 1)[1])
    else:
        raise ValueError(f"unknown beta mode {beta_mode!r}")
    cfg = ReceiverConfig(Alphabet(alphabet_kind, alpha), beta, PnrResolution(m), noise, **kw)
    return beta, error_probability(cfg)


def error_curves(alpha_sq_grid, m_list, noise: NoiseModel, optimize: bool = True, *,
                 beta_mode: str | None = None, threads: int = 1, **kw) -> list:
    """Error probability per ``(alpha_sq, m)`` with QNL, loss-adjusted QNL and Helstrom columns.

    ``optimize=False`` defaults to Kennedy nulling (``beta = alpha``).
    """
    mode = beta_mode or ("opt" if optimize else "null")
    keys = sorted((int(m), float(a2)) for m in m_list for a2 in alpha_sq_grid)

    def row(key):
        m, a2 = key
        beta, p = evaluate_point(a2, m, noise, mode, **kw)
        alpha = math.sqrt(a2)
        return {
            "alpha_sq": a2, "m": m, **_noise_cols(noise), "beta_opt": beta, "p_error": p,
            "p_hom": homodyne_limit(alpha), "p_hom_adj": homodyne_limit(alpha, noise.eta),
            "p_hels": helstrom_bound(alpha),
        }

    return _pmap(row, keys, threads)


def curve_of(rows: list, m: int, column: str = "p_error") -> tuple:
    """``(alpha_sq array, values array)`` for one resolution out of ``error_curves`` rows."""
    sel = sorted((r["alpha_sq"], r[column]) for r in rows if r["m"] == m)
    a, v = zip(*sel)
    return np.array(a), np.array(v)


def first_exceedance(alpha_sq, values, reference, factor: float = 1.0):
    """Smallest ``alpha_sq`` where ``values > factor * reference``, or None."""
    idx = np.nonzero(np.asarray(values) > factor * np.asarray(reference))[0]
    return float(np.asarray(alpha_sq)[idx[0]]) if len(idx) else None


def sub_threshold_range(alpha_sq, values, reference):
    """Largest ``alpha_sq`` of the leading run where ``values < reference``, or None."""
    below = np.asarray(values) < np.asarray(reference)
    if not below[0]:
        return None
    stop = np.argmin(below) if not below.all() else len(below)
    return float(np.asarray(alpha_sq)[stop - 1])


@dataclass(frozen=True)
class RatioMap:
    """``log10(P_E / P_hom)`` over (visibility x mean photon number); rows follow ``xi_grid``."""

    xi_grid: np.ndarray
    alpha_sq_grid: np.ndarray
    log_ratio: np.ndarray
    m: int
    eta: float
    boundary: tuple  # (xi, alpha_sq) points where P_E = P_hom, linearly interpolated along alpha_sq

    @property
    def below_qnl(self) -> np.ndarray:
        return self.log_ratio < 0

    def rows(self) -> list:
        out = []
        for i, xi in enumerate(self.xi_grid):
            for j, a2 in enumerate(self.alpha_sq_grid):
                out.append({"xi": float(xi), "alpha_sq": float(a2), "m": self.m, "eta": self.eta,
                            "log10_ratio": float(self.log_ratio[i, j])})
        return out


def _boundary(xi_grid, alpha_sq_grid, log_ratio) -> tuple:
    pts = []
    for i, xi in enumerate(xi_grid):
        r = log_ratio[i]
        for j in range(len(r) - 1):
            if (r[j] < 0) != (r[j + 1] < 0):
                t = r[j] / (r[j] - r[j + 1])
                pts.append((float(xi), float(alpha_sq_grid[j] + t * (alpha_sq_grid[j + 1] - alpha_sq_grid[j]))))
    return tuple(pts)


def ratio_map(xi_grid, alpha_sq_grid, m: int, eta: float, *, nu: float = 0.0, p_ap: float = 0.0,
              threads: int = 1) -> RatioMap:
    """Optimized PNR(m) error over the ideal (``eta = 1``) QNL, on a log10 scale."""
    xi_grid = np.asarray(xi_grid, dtype=float)
    alpha_sq_grid = np.asarray(alpha_sq_grid, dtype=float)
    cells = [(i, j) for i in range(len(xi_grid)) for j in range(len(alpha_sq_grid))]

    def cell(ij):
        i, j = ij
        noise = NoiseModel(xi=xi_grid[i], eta=eta, nu=nu, p_ap=p_ap)
        alpha = math.sqrt(alpha_sq_grid[j])
        p = optimize_displacement(alpha, m, noise).p_error_min
        return math.log10(p / homodyne_limit(alpha))

    values = np.array(_pmap(cell, cells, threads)).reshape(len(xi_grid), len(alpha_sq_grid))
    return RatioMap(xi_grid, alpha_sq_grid, values, m, eta, _boundary(xi_grid, alpha_sq_grid, values))


def improvement_curve(alpha_sq_grid, m_list, xi: float, eta_list, *, nu: float = 0.0,
                      p_ap: float = 0.0, threads: int = 1) -> list:
    """Ideal-QNL error divided by the optimized PNR(m) error, per ``(eta, m, alpha_sq)``."""
    keys = sorted((float(eta), int(m), float(a2)) for eta in eta_list for m in m_list for a2 in alpha_sq_grid)

    def row(key):
        eta, m, a2 = key
        noise = NoiseModel(xi=xi, eta=eta, nu=nu, p_ap=p_ap)
        alpha = math.sqrt(a2)
        res = optimize_displacement(alpha, m, noise)
        p_hom = homodyne_limit(alpha)
        return {"alpha_sq": a2, "m": m, **_noise_cols(noise), "beta_opt": res.beta_opt,
                "p_error": res.p_error_min, "p_hom": p_hom, "improvement": p_hom / res.p_error_min}

    return _pmap(row, keys, threads)


@dataclass(frozen=True)
class DarkFloorStudy:
    rows: list
    floors: dict  # (alphabet kind, m) -> error floor

    def floor_ratio(self, kind: AlphabetKind, m: int) -> float:
        return self.floors[(AlphabetKind(kind), m + 1)] / self.floors[(AlphabetKind(kind), m)]


def dark_floor_study(alphabets, m_list, nu: float, alpha_sq_grid, *, tail: int = 10,
                     ook_beta_mode: str = "fixed:0", threads: int = 1) -> DarkFloorStudy:
    """Error curves with dark counts only, per alphabet and resolution.

    BPSK uses the optimized displacement. OOK alphabets use direct detection
    (``beta = 0``) unless ``ook_beta_mode`` says otherwise. The floor is the
    minimum over the last ``tail`` grid points.
    """
    if nu <= 0:
        raise ValueError(f"dark-count mean must be > 0, got {nu}")
    noise = NoiseModel(nu=nu)
    kinds = [AlphabetKind(k) for k in alphabets]
    keys = sorted((k.value, int(m), float(a2)) for k in kinds for m in m_list for a2 in alpha_sq_grid)

    def row(key):
        kind, m, a2 = AlphabetKind(key[0]), key[1], key[2]
        mode = "opt" if kind is AlphabetKind.BPSK else ook_beta_mode
        beta, p = evaluate_point(a2, m, noise, mode, alphabet_kind=kind)
        return {"alphabet": kind.value, "alpha_sq": a2, "m": m, **_noise_cols(noise),
                "beta_opt": beta, "p_error": p}

    rows = _pmap(row, keys, threads)
    floors = {}
    for k in kinds:
        for m in m_list:
            curve = [r["p_error"] for r in rows if r["alphabet"] == k.value and r["m"] == m]
            floors[(k, int(m))] = min(curve[-tail:])
    return DarkFloorStudy(rows, floors)


# name -> (kind, parameters); "homodyne" entries use eta only
COMPARISON_PRESETS = {
    "qnl": ("homodyne", {"eta": 1.0}),
    "helstrom": ("helstrom", {}),
    "homodyne_995": ("homodyne", {"eta": 0.995}),
    "homodyne_995_sys88": ("homodyne", {"eta": 0.995 * 0.88}),
    "homodyne_82": ("homodyne", {"eta": 0.82}),
    "pnr4_98": ("pnr", {"m": 4, "noise": NoiseModel(xi=0.998, eta=0.98)}),
    "pnr4_98_sys88": ("pnr", {"m": 4, "noise": NoiseModel(xi=0.998, eta=0.98 * 0.88)}),
    "experiment_pnr4": ("pnr", {"m": 4, "noise": NoiseModel(xi=0.998, eta=0.72, nu=3.6e-3, p_ap=1.10e-2)}),
    "ook_ideal": ("ook", {"m": 1, "noise": IDEAL}),
}


def comparison_study(alpha_sq_grid, presets=None, *, threads: int = 1) -> list:
    """One curve per named preset: ``{"preset", "alpha_sq", "p_error"}`` rows."""
    names = list(COMPARISON_PRESETS) if presets is None else list(presets)
    unknown = [n for n in names if n not in COMPARISON_PRESETS]
    if unknown:
        raise ValueError(f"unknown comparison preset {unknown[0]!r}")
    keys = sorted((n, float(a2)) for n in names for a2 in alpha_sq_grid)

    def row(key):
        name, a2 = key
        kind, params = COMPARISON_PRESETS[name]
        alpha = math.sqrt(a2)
        if kind == "homodyne":
            p = homodyne_limit(alpha, params["eta"])
        elif kind == "helstrom":
            p = helstrom_bound(alpha)
        elif kind == "pnr":
            p = optimize_displacement(alpha, params["m"], params["noise"]).p_error_min
        else:
            cfg = ReceiverConfig(Alphabet(AlphabetKind.OOK_PEAK, alpha), 0.0, PnrResolution(params["m"]), params["noise"])
            p = error_probability(cfg)
        return {"preset": name, "alpha_sq": a2, "p_error": p}

    return _pmap(row, keys, threads)
