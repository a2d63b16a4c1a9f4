"""Domain types for binary coherent-state discrimination with a displaced PNR receiver.

All types are frozen dataclasses validated on construction, so they can be
shared freely between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Any

import numpy as np


class ParameterError(ValueError):
    """Raised when a physical parameter is outside its allowed range.

    The offending field name is kept in ``field`` so the CLI can report it.
    """

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class AlphabetKind(str, Enum):
    BPSK = "BPSK"  # {|-a>, |a>}
    OOK_PEAK = "OOK_PEAK"  # {|0>, |a>}, same peak power as BPSK
    OOK_AVG = "OOK_AVG"  # {|0>, |sqrt(2) a>}, same average power as BPSK


class Hypothesis(IntEnum):
    H0 = 0  # |-a> for BPSK, vacuum for OOK
    H1 = 1  # |+a> for BPSK, the bright state for OOK


class AfterpulseMode(str, Enum):
    PAPER_ORDER2 = "PAPER_ORDER2"
    CASCADE = "CASCADE"


def _check_real(name: str, value: Any) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ParameterError(name, f"expected a real number, got {value!r}") from None
    if not math.isfinite(x):
        raise ParameterError(name, f"must be finite, got {value!r}")
    return x


@dataclass(frozen=True)
class Alphabet:
    kind: AlphabetKind = AlphabetKind.BPSK
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AlphabetKind(self.kind))
        alpha = _check_real("alpha", self.alpha)
        if alpha < 0:
            raise ParameterError("alpha", f"must be >= 0, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_mean_photons(cls, alpha_sq: float, kind: AlphabetKind = AlphabetKind.BPSK) -> "Alphabet":
        alpha_sq = _check_real("alpha_sq", alpha_sq)
        if alpha_sq < 0:
            raise ParameterError("alpha_sq", f"must be >= 0, got {alpha_sq}")
        return cls(kind, math.sqrt(alpha_sq))

    @property
    def alpha_sq(self) -> float:
        return self.alpha * self.alpha

    def amplitude(self, hypothesis: Hypothesis) -> float:
        """Signed real amplitude of the state under ``hypothesis``."""
        hypothesis = Hypothesis(hypothesis)
        if self.kind is AlphabetKind.BPSK:
            return self.alpha if hypothesis is Hypothesis.H1 else -self.alpha
        if hypothesis is Hypothesis.H0:
            return 0.0
        if self.kind is AlphabetKind.OOK_AVG:
            return math.sqrt(2.0) * self.alpha
        return self.alpha


@dataclass(frozen=True)
class NoiseModel:
    xi: float = 1.0
    eta: float = 1.0
    nu: float = 0.0
    p_ap: float = 0.0

    def __post_init__(self):
        xi = _check_real("xi", self.xi)
        eta = _check_real("eta", self.eta)
        nu = _check_real("nu", self.nu)
        p_ap = _check_real("p_ap", self.p_ap)
        if not 0.0 <= xi <= 1.0:
            raise ParameterError("xi", f"visibility must lie in [0, 1], got {xi}")
        if not 0.0 < eta <= 1.0:
            raise ParameterError("eta", f"efficiency must lie in (0, 1], got {eta}")
        if nu < 0.0:
            raise ParameterError("nu", f"dark-count mean must be >= 0, got {nu}")
        if not 0.0 <= p_ap < 1.0:
            raise ParameterError("p_ap", f"afterpulse probability must lie in [0, 1), got {p_ap}")
        for name, value in (("xi", xi), ("eta", eta), ("nu", nu), ("p_ap", p_ap)):
            object.__setattr__(self, name, value)


IDEAL = NoiseModel()
# System parameters of the reported APD experiment.
EXPERIMENT = NoiseModel(xi=0.998, eta=0.72, nu=3.6e-3, p_ap=1.10e-2)


@dataclass(frozen=True)
class PnrResolution:
    m: int = 1

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m:
            raise ParameterError("m", f"must be an integer, got {self.m!r}")
        if int(self.m) < 1:
            raise ParameterError("m", f"must be >= 1, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def n_outcomes(self) -> int:
        return self.m + 1


@dataclass(frozen=True)
class Priors:
    """Prior probabilities, stored as P(H1) only so that the pair always sums to one."""

    p_h1: float = 0.5

    def __post_init__(self):
        p = _check_real("p_h1", self.p_h1)
        if not 0.0 <= p <= 1.0:
            raise ParameterError("p_h1", f"prior must lie in [0, 1], got {p}")
        object.__setattr__(self, "p_h1", p)

    @property
    def p_h0(self) -> float:
        return 1.0 - self.p_h1

    def __getitem__(self, hypothesis: Hypothesis) -> float:
        return self.p_h1 if Hypothesis(hypothesis) is Hypothesis.H1 else self.p_h0

    def as_array(self) -> np.ndarray:
        return np.array([self.p_h0, self.p_h1])


@dataclass(frozen=True)
class ReceiverConfig:
    """One receiver setting: everything needed to evaluate an error probability.

    ``afterpulse_mode`` selects the analytic afterpulse model and
    ``cutoff_extra`` sets the internal Poisson cutoff K = m + cutoff_extra.
    """

    alphabet: Alphabet = field(default_factory=Alphabet)
    beta: float = 0.0
    resolution: PnrResolution = field(default_factory=PnrResolution)
    noise: NoiseModel = IDEAL
    priors: Priors = field(default_factory=Priors)
    afterpulse_mode: AfterpulseMode = AfterpulseMode.PAPER_ORDER2
    cutoff_extra: int = 40

    def __post_init__(self):
        beta = _check_real("beta", self.beta)
        if beta < 0:
            raise ParameterError("beta", f"displacement must be >= 0, got {beta}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "afterpulse_mode", AfterpulseMode(self.afterpulse_mode))
        if int(self.cutoff_extra) != self.cutoff_extra or self.cutoff_extra < 0:
            raise ParameterError("cutoff_extra", f"must be a nonnegative integer, got {self.cutoff_extra!r}")
        object.__setattr__(self, "cutoff_extra", int(self.cutoff_extra))

    @property
    def m(self) -> int:
        return self.resolution.m

    @property
    def cutoff(self) -> int:
        return self.resolution.m + self.cutoff_extra

    def with_beta(self, beta: float) -> "ReceiverConfig":
        return replace(self, beta=beta)

    def to_dict(self) -> dict:
        return {
            "alphabet": {"kind": self.alphabet.kind.value, "alpha": self.alphabet.alpha},
            "beta": self.beta,
            "m": self.m,
            "noise": {"xi": self.noise.xi, "eta": self.noise.eta, "nu": self.noise.nu, "p_ap": self.noise.p_ap},
            "priors": {"p_h1": self.priors.p_h1},
            "afterpulse_mode": self.afterpulse_mode.value,
            "cutoff_extra": self.cutoff_extra,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReceiverConfig":
        data = dict(data)
        alphabet = dict(data.pop("alphabet", {}))
        if "alpha_sq" in alphabet:
            a = Alphabet.from_mean_photons(alphabet.pop("alpha_sq"), alphabet.get("kind", "BPSK"))
            alphabet["alpha"] = a.alpha
        try:
            kind = AlphabetKind(alphabet.get("kind", "BPSK"))
        except ValueError:
            raise ParameterError("alphabet.kind", f"unknown alphabet {alphabet.get('kind')!r}") from None
        try:
            mode = AfterpulseMode(data.get("afterpulse_mode", AfterpulseMode.PAPER_ORDER2))
        except ValueError:
            raise ParameterError("afterpulse_mode", f"unknown mode {data.get('afterpulse_mode')!r}") from None
        unknown = set(data) - {"beta", "m", "noise", "priors", "afterpulse_mode", "cutoff_extra"}
        if unknown:
            raise ParameterError(sorted(unknown)[0], "unknown receiver field")
        return cls(
            alphabet=Alphabet(kind, alphabet.get("alpha", 0.0)),
            beta=data.get("beta", 0.0),
            resolution=PnrResolution(data.get("m", 1)),
            noise=NoiseModel(**data.get("noise", {})),
            priors=Priors(**data.get("priors", {})),
            afterpulse_mode=mode,
            cutoff_extra=data.get("cutoff_extra", 40),
        )


@dataclass(frozen=True)
class CountDistribution:
    """Probability mass over PNR outcomes {0, ..., m-1, m+}."""

    resolution: PnrResolution
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        if probs.shape != (self.resolution.n_outcomes,):
            raise ValueError(f"expected {self.resolution.n_outcomes} outcome probabilities, got shape {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("outcome probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"outcome probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def m(self) -> int:
        return self.resolution.m

    def __getitem__(self, k: int) -> float:
        return float(self.probs[k])

    def __len__(self) -> int:
        return len(self.probs)


def state_mean_photons(alphabet: Alphabet, hypothesis: Hypothesis) -> float:
    """Mean photon number of the undisplaced, lossless state for ``hypothesis``."""
    if alphabet.kind is AlphabetKind.OOK_AVG and Hypothesis(hypothesis) is Hypothesis.H1:
        return 2.0 * alphabet.alpha_sq
    a = alphabet.amplitude(hypothesis)
    return a * a
