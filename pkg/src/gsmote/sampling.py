"""Exact k-NN search, SMOTE interpolation and hypersphere (RSMOTE) sampling.

Also the random over/under-sampling baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._random import as_generator

# Rejection attempts before giving up on a radius too small to resolve in float64.
_MAX_SPHERE_TRIES = 1000


@dataclass(frozen=True)
class Neighborhood:
    center_index: int
    neighbor_indices: np.ndarray
    radii: np.ndarray


@dataclass(frozen=True)
class SyntheticBatch:
    """Generated points plus per-point provenance.

    ``radii`` holds the bound ``R`` the point was drawn under (the distance
    from the kernel to the chosen neighbor); ``degenerate`` marks points
    emitted as a copy of their kernel because ``R == 0``.
    """

    points: np.ndarray
    kernel_indices: np.ndarray
    radii: np.ndarray = field(default=None)
    degenerate: np.ndarray = field(default=None)
    log_prob: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-D, got shape {pts.shape}")
        n = pts.shape[0]
        kern = np.asarray(self.kernel_indices, dtype=np.intp).reshape(n)
        radii = np.full(n, np.nan) if self.radii is None else np.asarray(self.radii, dtype=np.float64)
        degen = np.zeros(n, dtype=bool) if self.degenerate is None else np.asarray(self.degenerate, dtype=bool)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "kernel_indices", kern)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "degenerate", degen)
        if self.log_prob is not None:
            object.__setattr__(self, "log_prob", np.asarray(self.log_prob, dtype=np.float64))

    def __len__(self) -> int:
        return self.points.shape[0]

    @classmethod
    def empty(cls, n_features: int) -> "SyntheticBatch":
        return cls(np.empty((0, n_features)), np.empty(0, dtype=np.intp))

    def take(self, indices) -> "SyntheticBatch":
        idx = np.asarray(indices, dtype=np.intp)
        return SyntheticBatch(
            self.points[idx],
            self.kernel_indices[idx],
            self.radii[idx],
            self.degenerate[idx],
            None if self.log_prob is None else self.log_prob[idx],
        )

    @classmethod
    def concat(cls, batches, n_features: int) -> "SyntheticBatch":
        batches = list(batches)
        if not batches:
            return cls.empty(n_features)
        has_lp = all(b.log_prob is not None for b in batches)
        return cls(
            np.vstack([b.points for b in batches]),
            np.concatenate([b.kernel_indices for b in batches]),
            np.concatenate([b.radii for b in batches]),
            np.concatenate([b.degenerate for b in batches]),
            np.concatenate([b.log_prob for b in batches]) if has_lp else None,
        )


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(getattr(X, "X", X), dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def knn(X, query_index: int, k: int) -> Neighborhood:
    """Brute-force Euclidean k nearest neighbours of row ``query_index``.

    The query row itself is excluded; equal distances go to the lower index.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 0 <= query_index < n:
        raise IndexError(f"query_index {query_index} out of range for {n} rows")
    if k < 1 or k >= n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    d = np.sqrt(((X - X[query_index]) ** 2).sum(axis=1))
    d[query_index] = np.inf
    order = np.argsort(d, kind="stable")[:k]
    return Neighborhood(int(query_index), order, d[order])


def smote_interpolate(x_i, x_k, e: float) -> np.ndarray:
    """Point at fraction ``e`` along the segment from ``x_i`` to ``x_k``.

    Evaluated as ``(1 - e) * x_i + e * x_k`` which equals
    ``x_i + (x_k - x_i) * e`` algebraically but reproduces both endpoints
    exactly in floating point.
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    x_k = np.asarray(x_k, dtype=np.float64)
    if x_i.shape != x_k.shape:
        raise ValueError(f"dimension mismatch: {x_i.shape} vs {x_k.shape}")
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"e must be in [0, 1], got {e}")
    return (1.0 - e) * x_i + e * x_k


def _neighbor_table(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    nbrs = np.empty((X.shape[0], k), dtype=np.intp)
    dist = np.empty((X.shape[0], k))
    for i in range(X.shape[0]):
        nb = knn(X, i, k)
        nbrs[i] = nb.neighbor_indices
        dist[i] = nb.radii
    return nbrs, dist


def _check_amount(X: np.ndarray, amount: int, k: int) -> None:
    if amount < 0:
        raise ValueError(f"amount must be non-negative, got {amount}")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if X.shape[0] <= k:
        raise ValueError(f"minority class has {X.shape[0]} instances; need more than k={k}")


def smote(X_min, amount: int, k: int = 5, random_state=None) -> SyntheticBatch:
    """Classic SMOTE: kernel and neighbour uniform, point uniform on the segment."""
    X = _as_matrix(X_min)
    _check_amount(X, amount, k)
    rng = as_generator(random_state)
    if amount == 0:
        return SyntheticBatch.empty(X.shape[1])
    nbrs, dist = _neighbor_table(X, k)
    kernels = rng.integers(0, X.shape[0], size=amount)
    picks = rng.integers(0, k, size=amount)
    e = rng.random(amount)
    pts = np.array([
        smote_interpolate(X[i], X[nbrs[i, j]], float(t)) for i, j, t in zip(kernels, picks, e)
    ])
    radii = dist[kernels, picks]
    return SyntheticBatch(pts, kernels, radii, radii == 0)


def sample_hypersphere(x_i, r: float, random_state=None, volume_uniform: bool = False) -> np.ndarray:
    """Draw ``p`` with ``0 < |p - x_i| < r``.

    The direction is a normalised standard-normal vector. The radial
    coordinate is uniform on ``(0, r)`` by default; ``volume_uniform``
    draws it as ``r * u**(1/n)`` instead, which is uniform over the ball.
    Draws that land on the boundary after rounding are rejected.
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    if not np.isfinite(r) or r <= 0:
        raise ValueError(f"radius must be positive and finite, got {r}")
    rng = as_generator(random_state)
    n = x_i.shape[0]
    for _ in range(_MAX_SPHERE_TRIES):
        v = rng.standard_normal(n)
        norm = np.sqrt(v @ v)
        u = rng.random()
        if norm == 0.0 or u == 0.0:
            continue
        rho = r * u ** (1.0 / n) if volume_uniform else r * u
        p = x_i + (rho / norm) * v
        d = np.linalg.norm(p - x_i)
        if 0.0 < d < r:
            return p
    raise ValueError(f"radius {r!r} too small to sample around a point of magnitude {np.abs(x_i).max()!r}")


def _rsmote_point(X, nbrs, dist, kernel, rng, volume_uniform):
    j = rng.integers(0, nbrs.shape[1])
    r = dist[kernel, j]
    if r == 0.0:
        return X[kernel].copy(), r, True
    return sample_hypersphere(X[kernel], r, rng, volume_uniform), r, False


def rsmote(X_min, amount: int, k: int = 5, random_state=None, volume_uniform: bool = False) -> SyntheticBatch:
    """SMOTE with the segment replaced by the open ball of radius ``|x_k - x_i|``."""
    X = _as_matrix(X_min)
    _check_amount(X, amount, k)
    rng = as_generator(random_state)
    if amount == 0:
        return SyntheticBatch.empty(X.shape[1])
    nbrs, dist = _neighbor_table(X, k)
    kernels = rng.integers(0, X.shape[0], size=amount)
    out = [_rsmote_point(X, nbrs, dist, i, rng, volume_uniform) for i in kernels]
    pts, radii, degen = zip(*out)
    return SyntheticBatch(np.array(pts), kernels, np.array(radii), np.array(degen))


def random_oversample(X_min, amount: int, random_state=None) -> SyntheticBatch:
    """Copies of existing minority points drawn uniformly with replacement."""
    X = _as_matrix(X_min)
    if X.shape[0] == 0:
        raise ValueError("cannot oversample an empty set")
    if amount < 0:
        raise ValueError(f"amount must be non-negative, got {amount}")
    idx = as_generator(random_state).integers(0, X.shape[0], size=amount)
    return SyntheticBatch(X[idx].copy(), idx, np.zeros(amount), np.ones(amount, dtype=bool))


def random_undersample(X_maj, target_size: int, random_state=None) -> np.ndarray:
    """Indices of a uniform subset of ``target_size`` rows, without replacement.

    Returns sorted row indices so callers can subset features and labels alike.
    """
    X = _as_matrix(X_maj)
    if X.shape[0] == 0:
        raise ValueError("cannot undersample an empty set")
    if not 0 <= target_size <= X.shape[0]:
        raise ValueError(f"target_size must be in [0, {X.shape[0]}], got {target_size}")
    idx = as_generator(random_state).choice(X.shape[0], size=target_size, replace=False)
    return np.sort(idx)
