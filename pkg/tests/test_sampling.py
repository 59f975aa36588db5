import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsmote.sampling import (
    SyntheticBatch,
    knn,
    random_oversample,
    random_undersample,
    rsmote,
    sample_hypersphere,
    smote,
    smote_interpolate,
)


def brute_force_knn(X, i, k):
    dists = [(np.sqrt(((X[j] - X[i]) ** 2).sum()), j) for j in range(len(X)) if j != i]
    dists.sort()
    return [j for _, j in dists[:k]], [d for d, _ in dists[:k]]


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 25), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_knn_matches_brute_force(n, dim, seed):
    X = np.random.default_rng(seed).standard_normal((n, dim))
    k = min(3, n - 1)
    for i in range(n):
        nb = knn(X, i, k)
        idx, dist = brute_force_knn(X, i, k)
        assert nb.neighbor_indices.tolist() == idx
        np.testing.assert_allclose(nb.radii, dist, rtol=1e-12)
        assert i not in nb.neighbor_indices


def test_knn_ties_go_to_lower_index():
    X = np.array([[0.0], [1.0], [-1.0], [1.0]])
    nb = knn(X, 0, 2)
    assert nb.neighbor_indices.tolist() == [1, 2]


def test_knn_duplicate_points_have_zero_radius():
    X = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
    nb = knn(X, 0, 1)
    assert nb.neighbor_indices.tolist() == [1] and nb.radii[0] == 0.0


def test_knn_bad_k():
    X = np.zeros((4, 2))
    with pytest.raises(ValueError):
        knn(X, 0, 4)
    with pytest.raises(ValueError):
        knn(X, 0, 0)
    with pytest.raises(IndexError):
        knn(X, 4, 1)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=5).flatmap(
    lambda a: st.tuples(st.just(a), st.lists(st.floats(-1e6, 1e6), min_size=len(a), max_size=len(a)))))
def test_interpolation_endpoints_exact(pair):
    a, b = map(np.array, pair)
    np.testing.assert_array_equal(smote_interpolate(a, b, 0.0), a)
    np.testing.assert_array_equal(smote_interpolate(a, b, 1.0), b)


@given(st.floats(0, 1))
def test_interpolation_stays_on_segment(e):
    a, b = np.array([0.0, 2.0]), np.array([4.0, -2.0])
    p = smote_interpolate(a, b, e)
    assert np.allclose(p, a + (b - a) * e)
    assert np.all(p >= np.minimum(a, b) - 1e-12) and np.all(p <= np.maximum(a, b) + 1e-12)


def test_interpolation_errors():
    with pytest.raises(ValueError):
        smote_interpolate([0, 0], [1, 1, 1], 0.5)
    with pytest.raises(ValueError):
        smote_interpolate([0.0], [1.0], 1.5)


def test_smote_points_lie_on_kernel_segments():
    X = np.random.default_rng(4).standard_normal((30, 3))
    batch = smote(X, 200, k=4, random_state=0)
    assert len(batch) == 200
    for p, i, r in zip(batch.points, batch.kernel_indices, batch.radii):
        nb = knn(X, i, 4)
        # p must be on the segment to one of the kernel's neighbours
        ok = False
        for j in nb.neighbor_indices:
            seg = X[j] - X[i]
            t = (p - X[i]) @ seg / (seg @ seg)
            if -1e-12 <= t <= 1 + 1e-12 and np.allclose(X[i] + t * seg, p, atol=1e-9):
                ok = True
        assert ok
        assert r in nb.radii


def test_smote_empty_amount_and_too_few_points():
    X = np.zeros((6, 2))
    assert len(smote(X, 0, k=5)) == 0
    with pytest.raises(ValueError):
        smote(X[:5], 3, k=5)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1), st.booleans())
def test_hypersphere_strict_containment(dim, r, seed, volume):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim) * 10
    for _ in range(20):
        p = sample_hypersphere(x, r, rng, volume)
        d = np.linalg.norm(p - x)
        assert 0.0 < d < r


def test_hypersphere_one_dimension():
    rng = np.random.default_rng(0)
    pts = np.array([sample_hypersphere(np.array([2.0]), 0.5, rng)[0] for _ in range(2000)])
    assert np.all((pts > 1.5) & (pts < 2.5)) and np.all(pts != 2.0)
    # both sides of the kernel are reached
    assert (pts < 2.0).mean() == pytest.approx(0.5, abs=0.05)


def test_hypersphere_direction_isotropic():
    rng = np.random.default_rng(123)
    x = np.zeros(3)
    dirs = np.empty((100_000, 3))
    for i in range(dirs.shape[0]):
        p = sample_hypersphere(x, 1.0, rng)
        dirs[i] = p / np.linalg.norm(p)
    assert np.linalg.norm(dirs.mean(axis=0)) < 0.02


def test_hypersphere_radius_distributions():
    rng = np.random.default_rng(7)
    x = np.zeros(4)
    rad = np.array([np.linalg.norm(sample_hypersphere(x, 2.0, rng)) for _ in range(20_000)])
    vol = np.array([np.linalg.norm(sample_hypersphere(x, 2.0, rng, True)) for _ in range(20_000)])
    # radius-uniform: mean r/2; volume-uniform in 4-D: mean 4/5 r
    assert rad.mean() == pytest.approx(1.0, abs=0.02)
    assert vol.mean() == pytest.approx(1.6, abs=0.02)


@pytest.mark.parametrize("r", [0.0, -1.0, np.inf, np.nan])
def test_hypersphere_bad_radius(r):
    with pytest.raises(ValueError):
        sample_hypersphere(np.zeros(2), r, 0)


def test_hypersphere_radius_below_resolution():
    with pytest.raises(ValueError):
        sample_hypersphere(np.array([1e20]), 1e-10, 0)


def test_rsmote_containment_and_determinism():
    X = np.random.default_rng(1).standard_normal((25, 2))
    a = rsmote(X, 300, k=5, random_state=9)
    b = rsmote(X, 300, k=5, random_state=9)
    np.testing.assert_array_equal(a.points, b.points)
    d = np.linalg.norm(a.points - X[a.kernel_indices], axis=1)
    assert np.all(d > 0) and np.all(d < a.radii)


def test_rsmote_duplicate_neighbours_emit_degenerate_copies():
    X = np.array([[0.0, 0.0]] * 4 + [[10.0, 10.0]] * 4)
    batch = rsmote(X, 50, k=3, random_state=0)
    assert batch.degenerate.all()
    np.testing.assert_array_equal(batch.points, X[batch.kernel_indices])


def test_random_oversample_copies():
    X = np.arange(10.0).reshape(5, 2)
    batch = random_oversample(X, 12, 0)
    np.testing.assert_array_equal(batch.points, X[batch.kernel_indices])
    assert len(batch) == 12


def test_random_undersample_subset():
    X = np.arange(40.0).reshape(20, 2)
    idx = random_undersample(X, 7, 3)
    assert len(idx) == 7 and len(set(idx.tolist())) == 7
    assert np.all(np.diff(idx) > 0)
    with pytest.raises(ValueError):
        random_undersample(X, 21, 0)


def test_batch_take_and_concat():
    a = SyntheticBatch(np.ones((2, 3)), [0, 1], [1.0, 2.0])
    b = SyntheticBatch(np.zeros((1, 3)), [4], [0.0], [True])
    c = SyntheticBatch.concat([a, b], 3)
    assert len(c) == 3 and c.degenerate.tolist() == [False, False, True]
    assert c.take([2]).kernel_indices.tolist() == [4]
    assert len(SyntheticBatch.concat([], 3)) == 0
