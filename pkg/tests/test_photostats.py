"""Count statistics: oracles are direct Poisson sums and the closed-form geometric chain."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnr_receiver.model import (
    AfterpulseMode,
    Alphabet,
    Hypothesis,
    NoiseModel,
    ParameterError,
    PnrResolution,
    ReceiverConfig,
)
from pnr_receiver.photostats import (
    afterpulse_transform,
    apply_efficiency_and_darks,
    count_distribution,
    count_probabilities,
    displaced_mean,
    poisson_with_tail,
    untruncated_pmf,
)

BPSK1 = Alphabet("BPSK", 1.0)


def poisson_direct(mu, k):
    return mu ** k * math.exp(-mu) / math.factorial(k)


@pytest.mark.parametrize("hyp, beta, xi, expected", [
    (Hypothesis.H1, 1.0, 1.0, 4.0),
    (Hypothesis.H0, 1.0, 1.0, 0.0),
    (Hypothesis.H0, 1.0, 0.998, 0.004),
])
def test_displaced_mean_bpsk(hyp, beta, xi, expected):
    assert displaced_mean(BPSK1, hyp, beta, xi) == pytest.approx(expected, abs=1e-15)


def test_displaced_mean_ook():
    ook = Alphabet("OOK_PEAK", 2.0)
    assert displaced_mean(ook, Hypothesis.H1, 0.0, 0.9) == 4.0
    assert displaced_mean(ook, Hypothesis.H0, 0.5, 0.9) == 0.25
    # a^2 + b^2 - 2 xi a b with a = 2, b = 1
    assert displaced_mean(ook, Hypothesis.H1, 1.0, 0.5) == pytest.approx(3.0)
    assert displaced_mean(Alphabet("OOK_AVG", 1.0), Hypothesis.H1, 0.0, 1.0) == 2.0


def test_displaced_mean_rejects():
    with pytest.raises(ParameterError):
        displaced_mean(BPSK1, Hypothesis.H0, -0.1, 1.0)
    with pytest.raises(ParameterError):
        displaced_mean(BPSK1, Hypothesis.H0, 0.1, 1.5)


def test_displaced_mean_clamped_nonnegative():
    a = Alphabet("BPSK", 0.1 + 0.2)
    assert displaced_mean(a, Hypothesis.H0, 0.30000000000000004, 1.0) >= 0.0


@pytest.mark.parametrize("mean, noise, expected", [
    (4.0, NoiseModel(eta=1.0, nu=0.0), 4.0),
    (4.0, NoiseModel(eta=0.72, nu=3.6e-3), 2.8836),
    (0.0, NoiseModel(eta=0.72, nu=3.6e-3), 3.6e-3),
])
def test_efficiency_and_darks(mean, noise, expected):
    assert apply_efficiency_and_darks(mean, noise) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("mean, k_max, expected", [
    (0.0, 3, [1, 0, 0, 0]),
    (1.0, 1, [0.367879, 0.367879]),
    (2.0, 2, [0.135335, 0.270671, 0.270671]),
])
def test_untruncated_pmf_examples(mean, k_max, expected):
    np.testing.assert_allclose(untruncated_pmf(mean, k_max), expected, atol=5e-7)


@pytest.mark.parametrize("mean", [0.3, 1.0, 4.5, 12.0])
def test_untruncated_pmf_matches_direct_sum(mean):
    direct = [poisson_direct(mean, k) for k in range(25)]
    np.testing.assert_allclose(untruncated_pmf(mean, 24), direct, rtol=1e-12)


def test_untruncated_pmf_large_mean_no_overflow():
    p = untruncated_pmf(100.0, 100)
    assert np.all(np.isfinite(p))
    # log-space oracle: log P(100) = 100 log 100 - 100 - log(100!)
    expected = math.exp(100 * math.log(100) - 100 - math.lgamma(101))
    assert p[100] == pytest.approx(expected, rel=1e-12)
    assert p[100] == pytest.approx(0.03986099680914713, rel=1e-12)


def test_poisson_tail_is_accurate_far_below_epsilon():
    # P(N >= 5 | 1e-4) ~ 1e-20 / 120; 1 - sum would return 0 or noise
    tail = poisson_with_tail(1e-4, 5)[-1]
    expected = sum(poisson_direct(1e-4, k) for k in range(5, 12))
    assert tail == pytest.approx(expected, rel=1e-10)


def test_afterpulse_identity():
    pmf = poisson_with_tail(2.0, 10)
    for mode in AfterpulseMode:
        np.testing.assert_array_equal(afterpulse_transform(pmf, 0.0, mode), pmf)


def test_afterpulse_cascade_geometric_chain():
    pmf = np.zeros(8)
    pmf[1] = 1.0
    out = afterpulse_transform(pmf, 0.01, "CASCADE")
    # P(extra = e) = p^e (1 - p)
    np.testing.assert_allclose(out[1:4], [0.99, 0.0099, 9.9e-5], rtol=1e-12)
    assert out.sum() == pytest.approx(1.0, abs=1e-15)


def test_afterpulse_order2_literal_gains():
    pmf = np.zeros(8)
    pmf[1] = 1.0
    out = afterpulse_transform(pmf, 0.01, "PAPER_ORDER2")
    assert out[2] == pytest.approx(0.01, rel=1e-12)
    assert out[3] == pytest.approx(1e-4, rel=1e-12)
    assert out[1] == pytest.approx(1 - 0.01 - 1e-4, rel=1e-12)


def test_afterpulse_order2_two_click_source():
    # P3 gains 2 p P2 from a pure two-click input
    pmf = np.zeros(8)
    pmf[2] = 1.0
    out = afterpulse_transform(pmf, 0.01, "PAPER_ORDER2")
    assert out[3] == pytest.approx(0.02, rel=1e-12)
    assert out[4] == pytest.approx(3 * 1e-4, rel=1e-12)


def test_afterpulse_rejects_unnormalized():
    with pytest.raises(ValueError):
        afterpulse_transform([0.5, 0.4], 0.01)


def test_afterpulse_last_bin_absorbs_overflow():
    pmf = np.array([0.0, 0.0, 1.0])
    out = afterpulse_transform(pmf, 0.3, "CASCADE")
    np.testing.assert_allclose(out, [0.0, 0.0, 1.0])


def _config(alpha_sq, beta, m, **noise):
    return ReceiverConfig(Alphabet("BPSK", math.sqrt(alpha_sq)), beta, PnrResolution(m), NoiseModel(**noise))


def test_count_distribution_nulled_and_bright():
    cfg = _config(1.0, 1.0, 1)
    np.testing.assert_allclose(count_distribution(cfg, Hypothesis.H0).probs, [1.0, 0.0])
    np.testing.assert_allclose(count_distribution(cfg, Hypothesis.H1).probs,
                               [math.exp(-4), 1 - math.exp(-4)], rtol=1e-14)


def test_count_distribution_mean_one_m2():
    # beta = 0 leaves mean alpha^2 = 1 for both hypotheses
    cfg = _config(1.0, 0.0, 2)
    e = math.exp(-1)
    np.testing.assert_allclose(count_distribution(cfg, Hypothesis.H0).probs, [e, e, 1 - 2 * e], rtol=1e-14)


def test_count_distribution_cutoff_does_not_change_outcomes():
    base = _config(3.0, 1.5, 3, xi=0.99, eta=0.8, nu=0.01, p_ap=0.02)
    ref = count_distribution(base, Hypothesis.H1).probs
    for extra in (0, 1, 5, 80):
        cfg = ReceiverConfig(base.alphabet, base.beta, base.resolution, base.noise, cutoff_extra=extra)
        np.testing.assert_allclose(count_distribution(cfg, Hypothesis.H1).probs, ref, rtol=1e-12, atol=1e-16)


configs = st.builds(
    _config,
    alpha_sq=st.floats(0, 25),
    beta=st.floats(0, 6),
    m=st.integers(1, 12),
    xi=st.floats(0, 1),
    eta=st.floats(0.01, 1),
    nu=st.floats(0, 0.5),
    p_ap=st.floats(0, 0.3),
)


@settings(max_examples=10_000, deadline=None)
@given(configs, st.sampled_from(list(Hypothesis)), st.sampled_from(list(AfterpulseMode)))
def test_normalization_property(cfg, hyp, mode):
    cfg = ReceiverConfig(cfg.alphabet, cfg.beta, cfg.resolution, cfg.noise, afterpulse_mode=mode)
    probs = count_distribution(cfg, hyp).probs
    assert abs(probs.sum() - 1.0) <= 1e-12
    assert np.all(probs >= 0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 30), st.floats(0, 0.05), st.sampled_from(list(AfterpulseMode)))
def test_top_outcome_nonincreasing_in_m(mean, p_ap, mode):
    tops = [count_probabilities(mean, m, p_ap, mode)[-1] for m in range(1, 10)]
    assert all(b <= a + 1e-15 for a, b in zip(tops, tops[1:]))


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 30), st.integers(1, 4), st.floats(0, 0.02))
def test_cascade_vs_order2_second_order(mean, m, p_ap):
    a = count_probabilities(mean, m, p_ap, "CASCADE")
    b = count_probabilities(mean, m, p_ap, "PAPER_ORDER2")
    assert np.abs(a - b).max() <= 5 * p_ap ** 2 + 1e-14  # rounding slack on the summed m+ bin


@given(st.floats(0.5, 10), st.floats(0.9, 1.0), st.floats(0.0, 0.02))
def test_nulled_mean_grows_as_visibility_drops(alpha_sq, xi, dxi):
    alpha = math.sqrt(alpha_sq)
    a = Alphabet("BPSK", alpha)
    hi = displaced_mean(a, Hypothesis.H0, alpha, xi)
    lo = displaced_mean(a, Hypothesis.H0, alpha, max(xi - dxi, 0.0))
    assert lo >= hi


@settings(max_examples=200, deadline=None)
@given(configs, st.sampled_from(list(Hypothesis)))
def test_efficiency_composition(cfg, hyp):
    # (eta, nu) on the raw mean == ideal detector fed with eta * <n> + nu
    n = displaced_mean(cfg.alphabet, hyp, cfg.beta, cfg.noise.xi)
    detected = apply_efficiency_and_darks(n, cfg.noise)
    direct = count_distribution(cfg, hyp).probs
    via_ideal = count_probabilities(detected, cfg.m, cfg.noise.p_ap, cfg.afterpulse_mode, cfg.cutoff)
    np.testing.assert_array_equal(direct, via_ideal)
