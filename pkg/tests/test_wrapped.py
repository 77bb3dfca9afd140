"""Wrapped normal density and wrapping helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from orbitgrad.wrapped import (
    truncation_order,
    wrap_centered,
    wrap_unit,
    wrapped_normal_logpdf,
)


def brute_force_logpdf(delta, sigma, Z):
    """Independent direct summation oracle (linear space, mpmath-free)."""
    total = 0.0
    for z in range(-Z, Z + 1):
        total += np.exp(-((delta + z) ** 2) / (2 * sigma**2))
    return np.log(total / np.sqrt(2 * np.pi * sigma**2))


class TestWrapHelpers:
    def test_wrap_unit_range(self):
        x = np.linspace(-5, 5, 101)
        w = wrap_unit(x)
        assert np.all((w >= 0) & (w < 1))
        assert np.allclose(np.sin(2 * np.pi * w), np.sin(2 * np.pi * x), atol=1e-12)

    def test_wrap_centered_range(self):
        x = np.linspace(-5, 5, 101)
        w = wrap_centered(x)
        assert np.all((w >= -0.5) & (w < 0.5))
        assert np.allclose(np.round(x - w), x - w, atol=1e-12)

    @given(st.floats(-100, 100))
    def test_wrap_unit_idempotent(self, x):
        assert wrap_unit(wrap_unit(x)) == pytest.approx(wrap_unit(x), abs=1e-12)


class TestTruncationOrder:
    def test_small_sigma_floor(self):
        # floor of 3 shifted copies regardless of concentration
        assert truncation_order(0.01) == 3
        assert truncation_order(0.3) == 3

    def test_grows_with_sigma(self):
        assert truncation_order(1.0) == 7
        assert truncation_order(2.0) == 13
        assert truncation_order(5.0) > truncation_order(2.0)


class TestWrappedNormalLogpdf:
    @pytest.mark.parametrize("sigma", [0.05, 0.2, 0.7, 1.5])
    def test_integrates_to_one(self, sigma):
        val, err = quad(
            lambda x: float(np.exp(wrapped_normal_logpdf(np.array([x]), sigma))),
            0.0, 1.0, limit=200,
        )
        assert abs(val - 1.0) <= 1e-6

    @pytest.mark.parametrize("sigma", [0.05, 0.3, 1.0])
    def test_matches_z100_oracle(self, sigma):
        deltas = np.linspace(-0.5, 0.5, 21)
        got = wrapped_normal_logpdf(deltas[:, None], sigma, trunc=100)
        want = np.array([brute_force_logpdf(d, sigma, 100) for d in deltas])
        assert np.abs(got - want).max() <= 1e-12

    @pytest.mark.parametrize("sigma", [0.05, 0.3, 1.0])
    def test_default_truncation_matches_z100(self, sigma):
        # the Z policy must already capture all the mass Z=100 sees
        deltas = np.linspace(-0.5, 0.5, 21)
        got = wrapped_normal_logpdf(deltas[:, None], sigma)
        want = wrapped_normal_logpdf(deltas[:, None], sigma, trunc=100)
        assert np.abs(got - want).max() <= 1e-12

    def test_shift_invariance(self):
        deltas = np.linspace(-0.5, 0.5, 21)[:, None]
        base = wrapped_normal_logpdf(deltas, 0.3)
        for shift in (-2.0, 1.0, 5.0):
            assert np.abs(wrapped_normal_logpdf(deltas + shift, 0.3) - base).max() <= 1e-10

    def test_factorizes_over_dims(self):
        d2 = np.array([[0.1, -0.3]])
        parts = wrapped_normal_logpdf(np.array([[0.1]]), 0.4) + wrapped_normal_logpdf(
            np.array([[-0.3]]), 0.4
        )
        assert wrapped_normal_logpdf(d2, 0.4) == pytest.approx(float(parts[0]), abs=1e-12)

    def test_array_sigma_broadcast(self):
        deltas = np.array([[0.1], [0.2], [0.3]])
        sig = np.array([0.2, 0.5, 1.1])
        got = wrapped_normal_logpdf(deltas, sig)
        for i in range(3):
            want = wrapped_normal_logpdf(deltas[i], float(sig[i]))
            assert got[i] == pytest.approx(float(want), abs=1e-12)

    @settings(max_examples=30)
    @given(st.floats(0.05, 2.0), st.floats(-0.5, 0.5))
    def test_symmetry(self, sigma, delta):
        a = float(wrapped_normal_logpdf(np.array([delta]), sigma))
        b = float(wrapped_normal_logpdf(np.array([-delta]), sigma))
        assert a == pytest.approx(b, abs=1e-12)

    def test_large_sigma_near_uniform(self):
        deltas = np.linspace(0, 1, 11)[:, None]
        logp = wrapped_normal_logpdf(deltas, 10.0)
        assert np.abs(logp).max() <= 1e-6
