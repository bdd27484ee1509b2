import numpy as np
import pytest

from classmap.data import LabeledInput
from classmap.knn import (build_neighborhood, diagnose_knn, euclidean_dissimilarity, knn_farness,
                          knn_ld, knn_predict, knn_predict_all, knn_raw_farness)


def _line_diss(points):
    p = np.asarray(points, dtype=float)
    return np.abs(p[:, None] - p[None, :])


def test_neighborhood_without_ties(rng):
    D = euclidean_dissimilarity(rng.normal(size=(30, 2)))
    nb = build_neighborhood(D, 0, 4)
    assert nb.k_effective == 4
    assert 0 not in nb.members


def test_neighborhood_absorbs_ties():
    # from object 0: distances 1, 2, 3, 3, 3, 5
    D = _line_diss([0, 1, 2, 3, -3, 3, 5])
    nb = build_neighborhood(D, 0, 3)
    assert nb.d_star == 3.0
    assert nb.k_effective == 5
    brute = [j for j in range(1, 7) if D[0, j] <= sorted(D[0, 1:])[2]]
    np.testing.assert_array_equal(nb.members, brute)


def test_all_equal_dissimilarities():
    D = np.ones((6, 6)) - np.eye(6)
    assert build_neighborhood(D, 2, 1).k_effective == 5


def test_k_out_of_range():
    D = _line_diss([0, 1, 2])
    with pytest.raises(ValueError):
        build_neighborhood(D, 0, 3)
    with pytest.raises(ValueError):
        build_neighborhood(D, 0, 0)


def test_predict_examples():
    D = _line_diss([0, 1, 2, 3, 10])
    labels = np.array([1, 2, 2, 2, 1])
    assert knn_predict(build_neighborhood(D, 0, 3), labels, D) == 2
    # counts (2, 2): label 1 members at 0.3 on average, label 2 members at 0.5
    D = np.zeros((5, 5))
    d0 = [0.0, 0.2, 0.4, 0.5, 0.5]
    D[0, :] = D[:, 0] = d0
    for i in range(1, 5):
        for j in range(1, 5):
            if i != j:
                D[i, j] = 1.0
    labels = np.array([2, 1, 1, 2, 2])
    assert knn_predict(build_neighborhood(D, 0, 4), labels, D) == 1


def test_ld_examples():
    D = _line_diss([0, 1, 2, 3, 4, 5, 6])
    same = np.array([1, 1, 1, 1, 1, 1, 2])
    nb = build_neighborhood(D, 0, 5)
    assert knn_ld(nb, same, 1) == 0.0
    other = np.array([1, 2, 2, 2, 2, 2, 1])
    assert knn_ld(nb, other, 1) == 1.0
    mixed = np.array([1, 1, 1, 1, 2, 2, 1])
    assert knn_ld(nb, mixed, 1) == pytest.approx(0.4)


def test_tied_frequencies_give_half():
    D = _line_diss([0, 1, 2, 3, 4])
    labels = np.array([1, 1, 2, 1, 2])
    nb = build_neighborhood(D, 0, 4)
    assert knn_ld(nb, labels, 1) == 0.5


def test_farness_brute_force(rng):
    X = rng.normal(size=(40, 2))
    labels = np.repeat([1, 2], 20)
    D = euclidean_dissimilarity(X)
    k = 4
    F = knn_raw_farness(D, labels, k)
    for i in range(40):
        for g in (1, 2):
            cand = sorted(D[i, j] for j in range(40) if labels[j] == g and j != i)
            assert F[i, g - 1] == pytest.approx(np.median(cand[:k]), abs=1e-12)


def test_farness_zero_for_coincident_points():
    X = np.vstack([np.zeros((6, 2)), np.arange(20).reshape(10, 2) + 5.0])
    labels = np.repeat([1, 2], [6, 10])
    F = knn_raw_farness(euclidean_dissimilarity(X), labels, 5)
    np.testing.assert_array_equal(F[:6, 0], 0.0)


def test_small_class_uses_all_members(rng):
    X = rng.normal(size=(25, 2))
    labels = np.r_[np.ones(22, int), 2, 2, 2]
    D = euclidean_dissimilarity(X)
    F = knn_raw_farness(D, labels, 5)
    assert F[0, 1] == pytest.approx(np.median(D[0, 22:]))


def test_farness_scale_free(rng):
    X = rng.normal(size=(120, 3))
    labels = np.repeat([1, 2], 60)
    D = euclidean_dissimilarity(X)
    a = knn_farness(D, labels, 5)[2]
    b = knn_farness(2.0 * D, labels, 5)[2]
    np.testing.assert_allclose(a, b, rtol=1e-8)


def test_predict_invariant_under_monotone_transform(rng):
    X = rng.normal(size=(101, 2))
    labels = rng.integers(1, 3, size=101)
    D = euclidean_dissimilarity(X)
    a = knn_predict_all(D, labels, 5)
    b = knn_predict_all(np.expm1(D) ** 2, labels, 5)
    np.testing.assert_array_equal(a, b)


def test_diagnose_grid_and_sign_law(rng):
    labels = np.repeat([1, 2], 150)
    X = rng.normal(size=(300, 2)) + np.where(labels[:, None] == 1, 0.0, 1.0)
    t = diagnose_knn(LabeledInput("features", X, labels, ("a", "b")), 5)
    assert set(np.unique(t.ld)) <= {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}
    np.testing.assert_array_equal(t.ld > 0.5, t.predicted != t.given)


def test_diagnose_accepts_dissimilarity(rng):
    X = rng.normal(size=(60, 2))
    labels = np.repeat([1, 2, 3], 20)
    D = euclidean_dissimilarity(X)
    a = diagnose_knn(LabeledInput("dissimilarity", D, labels, ("a", "b", "c")), 3)
    b = diagnose_knn(LabeledInput("features", X, labels, ("a", "b", "c")), 3)
    np.testing.assert_array_equal(a.ld, b.ld)
    np.testing.assert_allclose(a.farness, b.farness)
