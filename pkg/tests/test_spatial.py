"""Window geometry, neighborhood sums, and membership reweighting."""

import numpy as np
import pytest

from fuzzseg.spatial import modulate, spatial_function, window_indices

from oracles import spatial_oracle, window_oracle


class TestWindowIndices:
    def test_interior_full_window(self):
        idx = 2 * 5 + 2  # center of a 5x5 image
        assert len(window_indices(idx, 5, 5, 1)) == 9

    def test_corner_clips_to_four(self):
        assert list(window_indices(0, 4, 4, 1)) == [0, 1, 4, 5]

    def test_top_edge_clips_to_six(self):
        # pixel (row 0, col 2) of a 5x5 image
        assert list(window_indices(2, 5, 5, 1)) == [1, 2, 3, 6, 7, 8]

    def test_matches_enumeration_oracle(self):
        for idx in range(6 * 4):
            for radius in (1, 2):
                got = list(window_indices(idx, 6, 4, radius))
                assert got == window_oracle(idx, 6, 4, radius)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            window_indices(25, 5, 5, 1)
        with pytest.raises(ValueError):
            window_indices(0, 5, 5, 0)


class TestSpatialFunction:
    def test_uniform_membership_interior(self):
        c = 4
        u = np.full((25, c), 1.0 / c)
        h = spatial_function(u, 5, 5, 1)
        assert h[12] == pytest.approx([9.0 / c] * c)

    def test_indicator_corner_sums_window_size(self):
        u = np.zeros((16, 3))
        u[:, 0] = 1.0
        h = spatial_function(u, 4, 4, 1)
        assert h[0].tolist() == [4.0, 0.0, 0.0]

    def test_two_by_two_golden(self):
        u = np.array([[0.9, 0.1], [0.6, 0.4], [0.2, 0.8], [0.5, 0.5]])
        h = spatial_function(u, 2, 2, 1)
        assert h[0] == pytest.approx([2.2, 1.8], rel=1e-15)

    def test_bit_identical_to_double_loop_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            w = int(rng.integers(1, 7))
            h = int(rng.integers(1, 7))
            c = int(rng.integers(1, 4))
            u = rng.random((w * h, c))
            r = int(rng.integers(1, 3))
            got = spatial_function(u, w, h, r)
            want = np.array(spatial_oracle(u.tolist(), w, h, r))
            assert np.array_equal(got, want)

    def test_linear_in_memberships(self):
        rng = np.random.default_rng(9)
        u1 = rng.random((24, 3))
        u2 = rng.random((24, 3))
        alpha = 0.3
        mixed = spatial_function(alpha * u1 + (1 - alpha) * u2, 6, 4, 1)
        parts = alpha * spatial_function(u1, 6, 4, 1) + (1 - alpha) * spatial_function(
            u2, 6, 4, 1
        )
        assert np.abs(mixed - parts).max() < 1e-12

    def test_row_sums_equal_window_sizes(self):
        rng = np.random.default_rng(3)
        u = rng.random((20, 3))
        u /= u.sum(axis=1, keepdims=True)
        h = spatial_function(u, 5, 4, 1)
        for idx in range(20):
            size = len(window_indices(idx, 5, 4, 1))
            assert abs(h[idx].sum() - size) < 1e-9
            assert np.all(h[idx] <= size + 1e-9)

    def test_rejects_mismatched_rows(self):
        with pytest.raises(ValueError):
            spatial_function(np.ones((5, 2)), 2, 2, 1)


class TestModulate:
    def test_identity_is_bit_for_bit(self):
        rng = np.random.default_rng(1)
        u = rng.random((10, 3))
        u /= u.sum(axis=1, keepdims=True)
        h = spatial_function(u, 5, 2, 1)
        out, fallbacks = modulate(u, h, p=1.0, q=0.0)
        assert fallbacks == 0
        assert np.array_equal(out, u)
        assert out is not u

    def test_constant_spatial_row_cancels(self):
        u = np.array([[0.7, 0.3]])
        h = np.array([[5.0, 5.0]])
        out, _ = modulate(u, h, p=1.0, q=1.0)
        assert out == pytest.approx(u, rel=1e-15)

    def test_golden_row(self):
        out, _ = modulate(np.array([[0.8, 0.2]]), np.array([[1.0, 3.0]]), 1.0, 1.0)
        assert out[0, 0] == pytest.approx(0.5714285714285714, rel=1e-12)
        assert out[0, 1] == pytest.approx(0.42857142857142855, rel=1e-12)

    def test_output_row_stochastic(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            n, c = int(rng.integers(1, 15)), int(rng.integers(1, 5))
            u = rng.random((n, c))
            u /= u.sum(axis=1, keepdims=True)
            h = rng.random((n, c)) * 9
            p, q = float(rng.uniform(0, 3)), float(rng.uniform(0, 3))
            if p == 0 and q == 0:
                p = 1.0
            out, _ = modulate(u, h, p, q)
            assert np.abs(out.sum(axis=1) - 1.0).max() < 1e-9
            assert np.all(out >= 0) and np.all(out <= 1 + 1e-12)

    def test_all_zero_row_falls_back(self):
        u = np.array([[0.5, 0.5], [0.9, 0.1]])
        h = np.array([[0.0, 0.0], [1.0, 2.0]])
        out, fallbacks = modulate(u, h, p=1.0, q=1.0)
        assert fallbacks == 1
        assert np.array_equal(out[0], u[0])
        assert out[1, 1] > 0

    def test_rejects_bad_exponents_and_shapes(self):
        u = np.array([[1.0]])
        with pytest.raises(ValueError):
            modulate(u, u, p=0.0, q=0.0)
        with pytest.raises(ValueError):
            modulate(u, u, p=-1.0, q=1.0)
        with pytest.raises(ValueError):
            modulate(u, np.ones((2, 1)), 1.0, 1.0)
