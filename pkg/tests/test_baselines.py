"""Closed-form limits checked against 50-digit mpmath evaluations."""
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from pnr_receiver.baselines import helstrom_bound, homodyne_limit

mpmath.mp.dps = 50


def hom_oracle(alpha, eta=1.0):
    return float(mpmath.mpf(1) / 2 * mpmath.erfc(mpmath.sqrt(2 * mpmath.mpf(eta)) * alpha))


def hels_oracle(alpha_sq):
    x = mpmath.mpf(alpha_sq)
    return float((1 - mpmath.sqrt(1 - mpmath.exp(-4 * x))) / 2)


@pytest.mark.parametrize("alpha, eta, expected", [
    (0.0, 1.0, 0.5),
    (1.0, 1.0, 0.022750),
    (1.0, 0.72, 0.044843),
])
def test_homodyne_examples(alpha, eta, expected):
    assert homodyne_limit(alpha, eta) == pytest.approx(expected, abs=5e-7)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 2.0, 3.0, 4.5])
@pytest.mark.parametrize("eta", [1.0, 0.85, 0.72])
def test_homodyne_vs_mpmath(alpha, eta):
    assert homodyne_limit(alpha, eta) == pytest.approx(hom_oracle(alpha, eta), rel=1e-13)


@pytest.mark.parametrize("alpha_sq, expected", [(0.0, 0.5), (1.0, 0.0046003), (1.0, 0.00460007)])
def test_helstrom_examples(alpha_sq, expected):
    assert helstrom_bound(math.sqrt(alpha_sq)) == pytest.approx(expected, abs=1e-6)


def test_helstrom_large_alpha_no_cancellation():
    value = helstrom_bound(math.sqrt(10.0))
    assert value == pytest.approx(0.25 * math.exp(-40), rel=1e-15)
    assert value == pytest.approx(1.062e-18, rel=1e-3)


@pytest.mark.parametrize("alpha_sq", [1e-6, 0.01, 0.3, 1.0, 4.0, 10.0, 25.0])
def test_helstrom_vs_mpmath(alpha_sq):
    assert helstrom_bound(math.sqrt(alpha_sq)) == pytest.approx(hels_oracle(alpha_sq), rel=1e-13)


def test_vectorized():
    a = np.array([0.0, 1.0])
    np.testing.assert_allclose(homodyne_limit(a), [0.5, homodyne_limit(1.0)])
    np.testing.assert_allclose(helstrom_bound(a), [0.5, helstrom_bound(1.0)])


@given(st.floats(0, 6))
def test_helstrom_below_qnl(alpha):
    assert helstrom_bound(alpha) <= homodyne_limit(alpha)


@given(st.floats(0.01, 5), st.floats(0.001, 0.5))
def test_strictly_decreasing(alpha, step):
    assert homodyne_limit(alpha + step) < homodyne_limit(alpha)
    assert helstrom_bound(alpha + step) < helstrom_bound(alpha)


@given(st.floats(0.05, 5), st.floats(0.05, 1.0), st.floats(0.01, 0.5))
def test_homodyne_worse_with_loss(alpha, eta, loss):
    if eta - loss > 0:
        assert homodyne_limit(alpha, eta - loss) > homodyne_limit(alpha, eta)
