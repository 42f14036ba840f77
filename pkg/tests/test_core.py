import numpy as np
import pytest

from svrgkit.core import (DimensionMismatch, RandomSource, SparseFeatures,
                          as_vector, axpy, dot, draw_index, sq_norm)


class TestDot:
    def test_dense(self):
        assert dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    def test_sparse(self):
        u = SparseFeatures.from_pairs([(2, 5.0)])
        assert dot(u, np.array([7.0, 9.0])) == 45.0

    def test_zero(self):
        assert dot(np.zeros(2), np.array([13.0, -2.5])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            dot(np.ones(3), np.ones(2))
        with pytest.raises(DimensionMismatch):
            dot(SparseFeatures.from_pairs([(5, 1.0)]), np.ones(2))


class TestAxpy:
    def test_dense(self):
        out = axpy(-0.1, np.array([10.0, 0.0]), np.array([1.0, 1.0]))
        assert np.allclose(out, [0.0, 1.0], atol=1e-15)

    def test_alpha_zero_is_identity(self):
        v = np.array([2.0, -3.0, 0.5])
        assert np.array_equal(axpy(0.0, np.ones(3), v), v)

    def test_sparse(self):
        u = SparseFeatures.from_pairs([(1, 2.0)])
        out = axpy(1.0, u, np.zeros(3))
        assert np.array_equal(out, [2.0, 0.0, 0.0])

    def test_input_unmodified(self):
        v = np.array([1.0, 1.0])
        axpy(3.0, np.ones(2), v)
        assert np.array_equal(v, [1.0, 1.0])

    def test_in_place(self):
        v = np.array([1.0, 1.0])
        out = axpy(2.0, np.array([1.0, 0.0]), v, out=v)
        assert out is v
        assert np.array_equal(v, [3.0, 1.0])

    def test_roundtrip_recovers_vector(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            v = rng.normal(size=6)
            u = rng.normal(size=6)
            alpha = rng.normal()
            back = axpy(-alpha, u, axpy(alpha, u, v))
            assert np.linalg.norm(back - v) <= 1e-12 * (1 + np.linalg.norm(v))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            axpy(1.0, np.ones(3), np.ones(4))


class TestSqNorm:
    def test_three_four(self):
        assert sq_norm(np.array([3.0, 4.0])) == 25.0

    def test_zero(self):
        assert sq_norm(np.zeros(5)) == 0.0

    def test_ones(self):
        assert sq_norm(np.ones(4)) == 4.0

    def test_equals_dot_exactly(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            v = rng.normal(size=8)
            assert sq_norm(v) == dot(v, v)


class TestSparseFeatures:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SparseFeatures([3, 2], [1.0, 1.0])

    def test_rejects_zero_index(self):
        with pytest.raises(ValueError):
            SparseFeatures([0], [1.0])

    def test_drops_explicit_zeros(self):
        sf = SparseFeatures([1, 2, 3], [1.0, 0.0, 2.0])
        assert sf.pairs() == [(1, 1.0), (3, 2.0)]

    def test_to_dense(self):
        sf = SparseFeatures.from_pairs([(1, 0.5), (3, 2.0)])
        assert np.array_equal(sf.to_dense(4), [0.5, 0.0, 2.0, 0.0])
        with pytest.raises(DimensionMismatch):
            sf.to_dense(2)


class TestAsVector:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_vector([1.0, float("nan")])

    def test_rejects_wrong_dim(self):
        with pytest.raises(DimensionMismatch):
            as_vector([1.0, 2.0], dim=3)


class TestRandomSource:
    def test_degenerate_support(self):
        rng = RandomSource(0)
        assert all(draw_index(rng, 1) == 1 for _ in range(10))

    def test_rejects_empty_support(self):
        with pytest.raises(ValueError):
            draw_index(RandomSource(0), 0)

    def test_replay_is_bit_exact(self):
        a = RandomSource(123)
        b = RandomSource(123)
        seq_a = [a.draw_index(1000) for _ in range(100)] + list(a.uniforms(50))
        seq_b = [b.draw_index(1000) for _ in range(100)] + list(b.uniforms(50))
        assert seq_a == seq_b

    def test_batch_matches_contract(self):
        idx = RandomSource(5).draw_indices(7, 1000)
        assert idx.min() >= 1 and idx.max() <= 7

    def test_uniformity_chi_square_bucket_counts(self):
        # 40000 draws over 4 buckets: each count within [9500, 10500].
        idx = RandomSource(42).draw_indices(4, 40_000)
        counts = np.bincount(idx, minlength=5)[1:]
        assert counts.sum() == 40_000
        assert counts.min() >= 9500 and counts.max() <= 10500

    def test_frequencies_within_five_sigma(self):
        n = 4
        draws = 10_000 * n
        idx = RandomSource(7).draw_indices(n, draws)
        counts = np.bincount(idx, minlength=n + 1)[1:]
        sigma = np.sqrt(draws * (1 / n) * (1 - 1 / n))
        assert np.all(np.abs(counts - draws / n) <= 5 * sigma)

    def test_fork_is_deterministic_and_distinct(self):
        base = RandomSource(9)
        child_a = base.fork(3)
        child_b = RandomSource(9).fork(3)
        other = RandomSource(9).fork(4)
        seq = [child_a.uniform() for _ in range(5)]
        assert seq == [child_b.uniform() for _ in range(5)]
        assert seq != [other.uniform() for _ in range(5)]

    def test_fork_does_not_disturb_parent(self):
        a = RandomSource(11)
        b = RandomSource(11)
        a.fork(0)
        assert a.uniform() == b.uniform()

    def test_choice_weighted_degenerate(self):
        rng = RandomSource(1)
        assert all(rng.choice_weighted(np.array([1.0])) == 0
                   for _ in range(5))

    def test_sample_without_replacement(self):
        rng = RandomSource(2)
        got = rng.sample_without_replacement(10, 4)
        assert len(set(got.tolist())) == 4
        assert got.min() >= 0 and got.max() < 10
