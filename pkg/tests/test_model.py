import math

import pytest
from hypothesis import given, strategies as st

from pnr_receiver.model import (
    Alphabet,
    AlphabetKind,
    CountDistribution,
    Hypothesis,
    NoiseModel,
    ParameterError,
    PnrResolution,
    Priors,
    ReceiverConfig,
    state_mean_photons,
)


@pytest.mark.parametrize("kind, hyp, expected", [
    ("BPSK", Hypothesis.H0, 1.0),
    ("BPSK", Hypothesis.H1, 1.0),
    ("OOK_PEAK", Hypothesis.H0, 0.0),
    ("OOK_PEAK", Hypothesis.H1, 1.0),
    ("OOK_AVG", Hypothesis.H0, 0.0),
    ("OOK_AVG", Hypothesis.H1, 2.0),
])
def test_state_mean_photons(kind, hyp, expected):
    assert state_mean_photons(Alphabet(kind, 1.0), hyp) == expected


@given(st.floats(0, 30))
def test_ook_avg_matches_bpsk_average_power(alpha):
    bpsk = Alphabet(AlphabetKind.BPSK, alpha)
    ook = Alphabet(AlphabetKind.OOK_AVG, alpha)
    avg = 0.5 * (state_mean_photons(ook, Hypothesis.H0) + state_mean_photons(ook, Hypothesis.H1))
    assert avg == pytest.approx(0.5 * (state_mean_photons(bpsk, 0) + state_mean_photons(bpsk, 1)), rel=1e-15)


def test_equal_priors_exact():
    p = Priors(0.5)
    assert p.p_h0 == p.p_h1 == 0.5


@given(st.floats(0, 1))
def test_priors_sum_to_one(p):
    pr = Priors(p)
    assert pr.p_h0 + pr.p_h1 == 1.0


@pytest.mark.parametrize("kwargs, name", [
    ({"xi": 1.2}, "xi"),
    ({"xi": -0.1}, "xi"),
    ({"eta": 0.0}, "eta"),
    ({"eta": 1.01}, "eta"),
    ({"nu": -1e-3}, "nu"),
    ({"p_ap": 1.0}, "p_ap"),
    ({"xi": float("nan")}, "xi"),
])
def test_noise_model_rejects_out_of_range(kwargs, name):
    with pytest.raises(ParameterError) as exc:
        NoiseModel(**kwargs)
    assert exc.value.field == name


def test_other_rejections():
    with pytest.raises(ParameterError):
        Alphabet("BPSK", -1.0)
    with pytest.raises(ParameterError):
        PnrResolution(0)
    with pytest.raises(ParameterError):
        Priors(1.5)
    with pytest.raises(ParameterError):
        ReceiverConfig(beta=-0.1)
    with pytest.raises(ValueError):
        Alphabet("QPSK", 1.0)


def test_count_distribution_invariants():
    res = PnrResolution(2)
    d = CountDistribution(res, [0.2, 0.3, 0.5])
    assert len(d) == 3 and d[2] == 0.5
    with pytest.raises(ValueError):
        CountDistribution(res, [0.2, 0.3, 0.6])
    with pytest.raises(ValueError):
        CountDistribution(res, [-0.1, 0.6, 0.5])
    with pytest.raises(ValueError):
        CountDistribution(res, [0.5, 0.5])


def test_config_roundtrip():
    cfg = ReceiverConfig(Alphabet("OOK_AVG", 1.3), 0.7, PnrResolution(3),
                         NoiseModel(0.998, 0.72, 3.6e-3, 0.011), Priors(0.3), "CASCADE", 12)
    assert ReceiverConfig.from_dict(cfg.to_dict()) == cfg


def test_config_from_dict_alpha_sq_and_errors():
    cfg = ReceiverConfig.from_dict({"alphabet": {"kind": "BPSK", "alpha_sq": 4.0}})
    assert cfg.alphabet.alpha == 2.0
    with pytest.raises(ParameterError) as exc:
        ReceiverConfig.from_dict({"alphabet": {"kind": "QAM"}})
    assert exc.value.field == "alphabet.kind"
    with pytest.raises(ParameterError) as exc:
        ReceiverConfig.from_dict({"bogus": 1})
    assert exc.value.field == "bogus"


def test_alpha_from_mean_photons():
    assert Alphabet.from_mean_photons(2.0).alpha == pytest.approx(math.sqrt(2.0), rel=1e-15)
