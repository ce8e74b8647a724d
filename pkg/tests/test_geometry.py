import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from edgcomplete.geometry import (
    center_gram_from_points,
    distance_matrix_from_points,
    gram_from_distances,
    is_edm,
    mds_embed,
    procrustes_align,
    relative_gram_error,
    sorted_eigh,
)

PYTH = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])


def clouds(max_n=12, max_d=4):
    return st.integers(1, max_n).flatmap(
        lambda n: st.integers(1, max_d).flatmap(
            lambda d: arrays(np.float64, (n, d),
                             elements=st.floats(-100, 100, allow_nan=False, width=64))))


def brute_gram(X):
    c = X.mean(axis=0)
    n = len(X)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            G[i, j] = np.dot(X[i] - c, X[j] - c)
    return G


class TestDistanceMatrix:
    def test_single_point(self):
        assert distance_matrix_from_points([[1.0, 2.0, 3.0]]).tolist() == [[0.0]]

    def test_unit_segment(self):
        assert distance_matrix_from_points([[0.0], [1.0]]).tolist() == [[0, 1], [1, 0]]

    def test_pythagorean(self):
        D = distance_matrix_from_points(PYTH)
        np.testing.assert_array_equal(D, [[0, 9, 16], [9, 0, 25], [16, 25, 0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            distance_matrix_from_points([[0.0, np.nan]])

    @given(clouds())
    def test_invariants(self, X):
        D = distance_matrix_from_points(X)
        assert np.array_equal(D, D.T)
        assert np.all(np.diag(D) == 0)
        assert np.all(D >= 0)


class TestCenterGram:
    def test_two_points(self):
        np.testing.assert_allclose(center_gram_from_points([[0.0], [1.0]]),
                                   [[0.25, -0.25], [-0.25, 0.25]])

    def test_brute_force(self):
        X = np.random.default_rng(3).standard_normal((3, 2))
        np.testing.assert_allclose(center_gram_from_points(X), brute_gram(X), atol=1e-14)

    @given(clouds(), arrays(np.float64, 4, elements=st.floats(-50, 50)))
    def test_translation_invariance(self, X, t):
        t = t[: X.shape[1]]
        G = center_gram_from_points(X)
        scale = max(1.0, np.abs(X).max() + np.abs(t).max()) ** 2
        np.testing.assert_allclose(center_gram_from_points(X + t), G, atol=1e-12 * scale)

    def test_row_sums(self):
        X = np.random.default_rng(0).standard_normal((40, 3))
        assert np.abs(center_gram_from_points(X).sum(axis=1)).max() <= 1e-10


class TestGramFromDistances:
    def test_two_points(self):
        np.testing.assert_allclose(gram_from_distances([[0, 1], [1, 0]]),
                                   [[0.25, -0.25], [-0.25, 0.25]])

    def test_pythagorean_matches_center_gram(self):
        G = gram_from_distances(distance_matrix_from_points(PYTH))
        np.testing.assert_allclose(G, center_gram_from_points(PYTH), atol=1e-12)

    def test_zero(self):
        assert np.all(gram_from_distances(np.zeros((4, 4))) == 0)

    @given(clouds(max_n=20))
    @settings(max_examples=50)
    def test_gower_identity(self, X):
        G = gram_from_distances(distance_matrix_from_points(X))
        scale = max(1.0, np.abs(X).max()) ** 2
        np.testing.assert_allclose(G, center_gram_from_points(X), atol=1e-10 * scale)
        assert np.abs(G.sum(axis=1)).max() <= 1e-10 * scale * len(X)


class TestIsEDM:
    def test_pythagorean(self):
        assert is_edm(distance_matrix_from_points(PYTH))

    def test_triangle_violation(self):
        D = np.array([[0, 1, 100], [1, 0, 1], [100, 1, 0]], dtype=float)
        # independent check of the sign via a direct eigensolve
        J = np.eye(3) - 1 / 3
        assert np.linalg.eigvalsh(-0.5 * J @ D @ J)[0] < 0
        assert not is_edm(D)

    def test_single(self):
        assert is_edm([[0.0]])


class TestMDS:
    def test_two_points(self):
        Y = mds_embed([[0.25, -0.25], [-0.25, 0.25]], 1)
        np.testing.assert_allclose(np.sort(Y[:, 0]), [-0.5, 0.5], atol=1e-12)

    def test_rank3_round_trip(self):
        X = np.random.default_rng(11).standard_normal((100, 3))
        G = center_gram_from_points(X)
        Y = mds_embed(G, 3)
        assert np.abs(center_gram_from_points(Y) - G).max() <= 1e-10 * np.abs(G).max()
        D = distance_matrix_from_points(X)
        err = np.linalg.norm(distance_matrix_from_points(Y) - D) / np.linalg.norm(D)
        assert err <= 1e-8

    def test_oversized_dimension_pads_with_zeros(self):
        X = np.random.default_rng(1).standard_normal((10, 2))
        Y = mds_embed(center_gram_from_points(X), 5)
        assert np.abs(Y[:, 2:]).max() < 1e-6

    def test_clamped_mass_reported(self):
        G = np.diag([2.0, -0.5, 0.0])
        Y, info = mds_embed(G, 2, return_info=True)
        assert info["clamped_mass"] == pytest.approx(0.5)
        assert np.all(Y[:, 1] == 0)

    def test_d_too_large(self):
        with pytest.raises(ValueError):
            mds_embed(np.eye(3), 4)

    def test_deterministic_signs(self):
        vals, vecs = sorted_eigh(np.diag([1.0, 3.0, 2.0]))
        assert list(vals) == [3.0, 2.0, 1.0]
        for k in range(3):
            nz = vecs[np.abs(vecs[:, k]) > 1e-12, k]
            assert nz[0] > 0


class TestProcrustes:
    def test_identity(self):
        X = np.random.default_rng(0).standard_normal((20, 3))
        assert procrustes_align(X, X)[1] == pytest.approx(0.0, abs=1e-13)

    def test_rotation_and_translation(self):
        X = np.random.default_rng(0).standard_normal((20, 2))
        R = np.array([[0.0, -1.0], [1.0, 0.0]])
        A = X @ R.T + np.array([5.0, -3.0])
        aligned, rmsd = procrustes_align(A, X)
        assert rmsd <= 1e-12 * 10
        np.testing.assert_allclose(aligned, X, atol=1e-12)

    def test_reflection_allowed(self):
        X = np.random.default_rng(2).standard_normal((15, 3))
        assert procrustes_align(X * np.array([1, 1, -1]), X)[1] <= 1e-12

    @pytest.mark.parametrize("eps", [1e-3, 1e-1])
    def test_noise_bound(self, eps):
        rng = np.random.default_rng(5)
        d = 3
        for _ in range(20):
            X = rng.standard_normal((50, d))
            E = eps * rng.standard_normal(X.shape)
            _, rmsd = procrustes_align(X + E, X)
            # the identity map is a candidate, so alignment never does worse
            assert rmsd <= np.sqrt((E**2).sum() / len(X)) + 1e-15
            assert rmsd <= 2 * eps * np.sqrt(d)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            procrustes_align(np.zeros((3, 2)), np.zeros((4, 2)))

    @given(st.integers(5, 60), st.integers(1, 4), st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_property(self, n, d, seed):
        X = np.random.default_rng(seed).standard_normal((n, d))
        Y = mds_embed(gram_from_distances(distance_matrix_from_points(X)), d)
        assert procrustes_align(Y, X - X.mean(axis=0))[1] <= 1e-8


class TestRelativeError:
    def test_basic(self):
        M = np.random.default_rng(0).standard_normal((5, 5))
        assert relative_gram_error(M, M) == 0.0
        assert relative_gram_error(2 * M, M) == pytest.approx(1.0)

    def test_constructed_perturbation(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((6, 6))
        E = rng.standard_normal((6, 6))
        E *= 0.1 * np.linalg.norm(M) / np.linalg.norm(E)
        assert relative_gram_error(M + E, M) == pytest.approx(0.1, rel=1e-12)

    def test_zero_reference(self):
        with pytest.raises(ValueError):
            relative_gram_error(np.eye(2), np.zeros((2, 2)))
