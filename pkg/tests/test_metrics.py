"""Sample-quality metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitgrad.errors import InvalidInput
from orbitgrad.metrics import rmsd_to_nearest, wasserstein2_1d


class TestRmsd:
    def test_exact_hit(self):
        assert rmsd_to_nearest([1.0], [-1.0, 1.0]) == 0.0

    def test_single_offset(self):
        assert rmsd_to_nearest([0.9], [-1.0, 1.0]) == pytest.approx(0.1, abs=1e-12)

    def test_two_samples(self):
        want = np.sqrt((0.01 + 0.04) / 2)
        assert rmsd_to_nearest([0.9, -1.2], [-1.0, 1.0]) == pytest.approx(want, abs=1e-12)

    def test_multidimensional(self):
        samples = np.array([[0.0, 0.0], [1.0, 1.0]])
        targets = np.array([[0.0, 1.0], [1.0, 1.0]])
        # nearest distances are 1 and 0
        assert rmsd_to_nearest(samples, targets) == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            rmsd_to_nearest([], [1.0])

    @settings(max_examples=25)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=10))
    def test_zero_iff_subset(self, xs):
        assert rmsd_to_nearest(xs, xs) == 0.0


class TestWasserstein:
    def test_identical_sets(self):
        assert wasserstein2_1d([1.0, -1.0, 0.5], [0.5, -1.0, 1.0]) == 0.0

    def test_shift(self):
        a = np.array([0.0, 1.0, 2.0])
        assert wasserstein2_1d(a, a + 0.25) == pytest.approx(0.25, abs=1e-12)

    def test_tiling_atoms(self):
        a = [-1.0, -1.0, 1.0, 1.0]
        assert wasserstein2_1d(a, [-1.0, 1.0]) == 0.0

    def test_untileable_rejected(self):
        with pytest.raises(InvalidInput):
            wasserstein2_1d([1.0, 2.0, 3.0], [0.0, 1.0])

    def test_symmetry_when_equal_size(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=50), rng.normal(size=50)
        assert wasserstein2_1d(a, b) == pytest.approx(wasserstein2_1d(b, a), abs=1e-12)

    def test_scipy_cross_check(self):
        # scipy's W1 lower-bounds W2 by Jensen on the same coupling
        from scipy.stats import wasserstein_distance

        rng = np.random.default_rng(1)
        a, b = rng.normal(size=200), rng.normal(1.0, 2.0, size=200)
        assert wasserstein2_1d(a, b) >= wasserstein_distance(a, b) - 1e-12
