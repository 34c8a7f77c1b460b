import math

import numpy as np
import numpy.testing as npt
import pytest

from charlm.kernels import (Rng, ShapeError, clip_elementwise, matvec,
                            sample_categorical, sigmoid, softmax)


class TestMatvec:
    def test_identity(self):
        npt.assert_array_equal(matvec(np.eye(2), np.array([3.0, -1.0])),
                               [3.0, -1.0])

    def test_row_sum(self):
        npt.assert_array_equal(matvec(np.ones((1, 3)), np.array([1.0, 2.0, 3.0])),
                               [6.0])

    def test_hand_computed(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        x = np.array([1.0, 1.0])
        # naive triple-loop oracle
        expected = np.zeros(2)
        for i in range(2):
            for j in range(2):
                expected[i] += m[i, j] * x[j]
        npt.assert_array_equal(matvec(m, x), expected)
        npt.assert_array_equal(expected, [3.0, 7.0])

    def test_matches_naive_loop_on_random(self, np_rng):
        m = np_rng.normal(size=(64, 64))
        x = np_rng.normal(size=64)
        naive = np.array([sum(m[i, j] * x[j] for j in range(64)) for i in range(64)])
        got = matvec(m, x)
        assert np.max(np.abs(got - naive) / np.maximum(np.abs(naive), 1e-300)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            matvec(np.eye(2), np.zeros(3))


class TestSigmoid:
    def test_zero(self):
        npt.assert_array_equal(sigmoid(np.zeros(2)), [0.5, 0.5])

    def test_saturation(self):
        y = sigmoid(np.array([1000.0]))
        assert np.isfinite(y[0]) and abs(y[0] - 1.0) < 1e-12
        y = sigmoid(np.array([-1000.0]))
        assert np.isfinite(y[0]) and y[0] >= 0.0

    def test_symmetry(self, np_rng):
        x = np_rng.normal(scale=5.0, size=50)
        npt.assert_allclose(sigmoid(-x), 1.0 - sigmoid(x), atol=1e-15)

    def test_range(self, np_rng):
        y = sigmoid(np_rng.normal(scale=100.0, size=100))
        assert np.all(y >= 0.0) and np.all(y <= 1.0)


class TestSoftmax:
    def test_uniform(self):
        npt.assert_allclose(softmax(np.full(4, 3.7)), np.full(4, 0.25), atol=1e-15)

    def test_shift_invariance(self, np_rng):
        for _ in range(10):
            x = np_rng.normal(size=6)
            c = np_rng.normal() * 100
            npt.assert_allclose(softmax(x + c), softmax(x), atol=1e-12)

    def test_closed_form(self):
        x = np.log(np.array([1.0, 2.0, 3.0]))
        # direct exponentiation oracle
        e = np.exp(x)
        oracle = e / e.sum()
        got = softmax(x)
        npt.assert_allclose(got, oracle, atol=1e-15)
        npt.assert_allclose(got, [1 / 6, 2 / 6, 3 / 6], atol=1e-12)

    def test_normalized_and_positive(self, np_rng):
        for _ in range(20):
            y = softmax(np_rng.normal(scale=50.0, size=10))
            assert abs(y.sum() - 1.0) <= 1e-9
            assert np.all(y > 0.0)


class TestClip:
    def test_within_bounds_unchanged(self):
        g = np.array([0.1, -0.2])
        npt.assert_array_equal(clip_elementwise(g, 1.0), g)

    def test_clamp(self):
        npt.assert_array_equal(clip_elementwise(np.array([50.0, -50.0]), 15.0),
                               [15.0, -15.0])

    def test_idempotent(self, np_rng):
        g = np_rng.normal(scale=30.0, size=(4, 4))
        once = clip_elementwise(g, 15.0)
        npt.assert_array_equal(clip_elementwise(once, 15.0), once)

    def test_sign_preserved(self, np_rng):
        g = np_rng.normal(scale=30.0, size=100)
        clipped = clip_elementwise(g, 2.0)
        nonzero = g != 0
        assert np.all(np.sign(clipped[nonzero]) == np.sign(g[nonzero]))

    def test_bad_tau(self):
        with pytest.raises(ValueError):
            clip_elementwise(np.zeros(2), 0.0)


class TestSampleCategorical:
    def test_degenerate(self):
        rng = Rng(7)
        for _ in range(20):
            assert sample_categorical(np.array([1.0, 0.0, 0.0]), rng) == 0

    def test_law_of_large_numbers(self):
        rng = Rng(42)
        p = np.array([0.5, 0.5])
        n = 100_000
        zeros = sum(1 for _ in range(n) if sample_categorical(p, rng) == 0)
        assert 0.49 <= zeros / n <= 0.51

    def test_deterministic(self):
        p = np.array([0.3, 0.3, 0.4])
        rng = Rng(5)
        draws1 = [sample_categorical(p, rng) for _ in range(20)]
        rng = Rng(5)
        draws2 = [sample_categorical(p, rng) for _ in range(20)]
        assert draws1 == draws2

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            sample_categorical(np.array([0.5, 0.2]), Rng(0))


class TestRng:
    def test_same_seed_same_stream(self):
        a, b = Rng(99), Rng(99)
        assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]

    def test_block_matches_scalar(self):
        a, b = Rng(123), Rng(123)
        block = a.next_u64_block(32)
        scalars = [b.next_u64() for _ in range(32)]
        assert list(int(x) for x in block) == scalars

    def test_uniform_range(self):
        rng = Rng(1)
        xs = [rng.uniform() for _ in range(1000)]
        assert all(0.0 <= x < 1.0 for x in xs)

    def test_matrix_bounds_and_determinism(self):
        m1 = Rng(3).uniform_matrix(10, 10, -0.1, 0.1)
        m2 = Rng(3).uniform_matrix(10, 10, -0.1, 0.1)
        npt.assert_array_equal(m1, m2)
        assert np.all(m1 >= -0.1) and np.all(m1 <= 0.1)

    def test_derive_streams_differ(self):
        base = Rng(7)
        s1, s2 = base.derive(1), base.derive(2)
        assert s1.next_u64() != s2.next_u64()

    def test_shuffle_is_permutation(self):
        items = list(range(50))
        rng = Rng(11)
        shuffled = items[:]
        rng.shuffle(shuffled)
        assert sorted(shuffled) == items and shuffled != items
