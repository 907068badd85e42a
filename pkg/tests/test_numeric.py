import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcast.errors import NumericError
from gridcast.numeric import Rng, finite_difference_gradient, pearson, softmax


class TestSoftmax:
    def test_uniform_scores(self):
        np.testing.assert_allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3)

    def test_saturation_no_overflow(self):
        out = softmax([1000.0, 0.0])
        assert np.isfinite(out).all()
        assert out[0] == pytest.approx(1.0)
        assert out[1] == pytest.approx(0.0, abs=1e-12)

    def test_hand_case(self):
        np.testing.assert_allclose(softmax([1.0, 2.0]),
                                   [0.26894, 0.73106], atol=1e-5)

    def test_empty_raises(self):
        with pytest.raises(NumericError):
            softmax([])

    def test_nan_raises(self):
        with pytest.raises(NumericError):
            softmax([1.0, np.nan])

    def test_sums_to_one_random(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 20))
            scores = rng.normal(0, 1, n) * rng.choice([1.0, 100.0, 1e4])
            assert abs(softmax(scores).sum() - 1.0) < 1e-12

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=10),
           st.floats(-1e3, 1e3))
    @settings(max_examples=200)
    def test_shift_invariance(self, scores, c):
        # |c| is capped so that the rounding of scores + c itself stays
        # below the comparison tolerance (the perturbation is in the
        # inputs, not in the softmax computation).
        a = softmax(scores)
        b = softmax(np.asarray(scores) + c)
        assert np.max(np.abs(a - b)) < 1e-12


class TestPearson:
    def test_self_correlation(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_anti_correlation(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_hand_case(self):
        assert pearson([1, 2, 3, 4], [1, 2, 3, 5]) == pytest.approx(0.98270,
                                                                    abs=1e-4)

    def test_zero_variance_returns_zero(self):
        assert pearson([5, 5, 5], [1, 2, 3]) == 0.0
        assert pearson([1, 2, 3], [7, 7, 7]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(NumericError):
            pearson([1, 2], [1, 2, 3])

    def test_too_short(self):
        with pytest.raises(NumericError):
            pearson([1], [2])

    def test_bounded_and_affine(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.normal(0, 1, 30)
            y = rng.normal(0, 1, 30)
            assert abs(pearson(x, y)) <= 1.0
            a = rng.choice([-3.0, 0.5, 2.0])
            b = rng.normal()
            assert pearson(x, a * x + b) == pytest.approx(np.sign(a), abs=1e-10)


class TestFiniteDifferenceGradient:
    def test_quadratic(self):
        g = finite_difference_gradient(lambda v: float(v[0] ** 2),
                                       np.array([3.0]))
        assert g[0] == pytest.approx(6.0, abs=1e-6)

    def test_constant(self):
        g = finite_difference_gradient(lambda v: 7.0, np.array([1.0, 2.0]))
        np.testing.assert_allclose(g, 0.0)

    def test_product_rule(self):
        g = finite_difference_gradient(lambda v: float(v[0] * v[1]),
                                       np.array([2.0, 5.0]))
        np.testing.assert_allclose(g, [5.0, 2.0], atol=1e-6)

    def test_bad_step(self):
        with pytest.raises(NumericError):
            finite_difference_gradient(lambda v: 0.0, np.array([1.0]), h=0.0)

    def test_non_finite_raises(self):
        with pytest.raises(NumericError):
            finite_difference_gradient(lambda v: float("inf"), np.array([1.0]))


class TestRng:
    def test_same_seed_same_stream(self):
        a = Rng(1234).uniform(size=10_000)
        b = Rng(1234).uniform(size=10_000)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).uniform(size=100),
                                  Rng(2).uniform(size=100))

    def test_derive_is_order_independent(self):
        parent1 = Rng(7)
        parent1.uniform(size=50)  # consume draws before deriving
        parent2 = Rng(7)
        a = parent1.derive("child").uniform(size=100)
        b = parent2.derive("child").uniform(size=100)
        np.testing.assert_array_equal(a, b)

    def test_derive_labels_independent(self):
        r = Rng(7)
        assert not np.array_equal(r.derive("a").uniform(size=100),
                                  r.derive("b").uniform(size=100))

    def test_permutation_and_integers(self):
        r = Rng(3)
        perm = r.permutation(10)
        assert sorted(perm.tolist()) == list(range(10))
        vals = Rng(3).derive("x").integers(0, 5, size=20)
        assert ((vals >= 0) & (vals < 5)).all()
