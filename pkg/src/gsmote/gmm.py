"""Gaussian mixture model trained by EM, plus the two GSMOTE roles it plays:
density-weighted kernel selection and top-K log-probability filtering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._random import as_generator
from .sampling import SyntheticBatch

_LOG_2PI = np.log(2.0 * np.pi)
_FORMAT = "gsmote-gmm"
_VERSION = 1
COVARIANCE_TYPES = ("full", "diag")


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Trained mixture parameters.

    ``covariances`` has shape ``(m, n, n)`` for ``'full'`` and ``(m, n)``
    (per-feature variances) for ``'diag'``.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    covariance_type: str = "full"
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        cov = np.asarray(self.covariances, dtype=np.float64)
        if self.covariance_type not in COVARIANCE_TYPES:
            raise ValueError(f"covariance_type must be one of {COVARIANCE_TYPES}")
        m, n = mu.shape
        if w.shape != (m,):
            raise ValueError(f"weights shape {w.shape} does not match {m} components")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        expected = (m, n, n) if self.covariance_type == "full" else (m, n)
        if cov.shape != expected:
            raise ValueError(f"covariances shape {cov.shape}, expected {expected}")
        if self.covariance_type == "full":
            try:
                chol = np.stack([linalg.cholesky(c, lower=True) for c in cov])
            except linalg.LinAlgError as exc:
                raise ValueError("covariance matrix is not positive definite") from exc
        else:
            if np.any(cov <= 0):
                raise ValueError("diagonal variances must be positive")
            chol = np.sqrt(cov)
        for name, value in (("weights", w), ("means", mu), ("covariances", cov), ("_chol", chol)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def component_log_densities(self, X) -> np.ndarray:
        """``log N(x | mu_k, Sigma_k)`` for every row and component, shape ``(N, m)``."""
        X = np.asarray(X, dtype=np.float64)
        return _component_log_densities(X, self.means, self._chol, self.covariance_type)

    def score_samples(self, X) -> np.ndarray:
        """Log mixture density of each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        return logsumexp(self.component_log_densities(X) + log_w, axis=1)

    def to_json(self) -> str:
        m, n = self.means.shape
        return json.dumps({
            "format": _FORMAT,
            "version": _VERSION,
            "covariance_type": self.covariance_type,
            "n_components": m,
            "n_features": n,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.reshape(m, -1).tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixture":
        doc = json.loads(text)
        if doc.get("format") != _FORMAT or doc.get("version") != _VERSION:
            raise ValueError(f"unsupported model format {doc.get('format')!r} v{doc.get('version')!r}")
        m, n = doc["n_components"], doc["n_features"]
        cov = np.array(doc["covariances"], dtype=np.float64)
        cov = cov.reshape(m, n, n) if doc["covariance_type"] == "full" else cov.reshape(m, n)
        return cls(np.array(doc["weights"]), np.array(doc["means"]).reshape(m, n), cov,
                   doc["covariance_type"])


@dataclass(frozen=True)
class EmReport:
    log_likelihood_trace: tuple[float, ...]
    iterations: int
    converged: bool
    regularization: float


def _component_log_densities(X, means, chol, covariance_type):
    N, n = X.shape
    out = np.empty((N, means.shape[0]))
    for k, mu in enumerate(means):
        diff = X - mu
        if covariance_type == "full":
            z = linalg.solve_triangular(chol[k], diff.T, lower=True, check_finite=False)
            maha = np.einsum("ij,ij->j", z, z)
            log_det = 2.0 * np.log(np.diag(chol[k])).sum()
        else:
            maha = ((diff / chol[k]) ** 2).sum(axis=1)
            log_det = 2.0 * np.log(chol[k]).sum()
        out[:, k] = -0.5 * (n * _LOG_2PI + log_det + maha)
    return out


def _trace_of_inverse(chol, covariance_type) -> np.ndarray:
    if covariance_type == "diag":
        return (1.0 / chol**2).sum(axis=1)
    n = chol.shape[1]
    eye = np.eye(n)
    return np.array([
        (linalg.solve_triangular(L, eye, lower=True, check_finite=False) ** 2).sum() for L in chol
    ])


def _cholesky(cov, covariance_type):
    if covariance_type == "diag":
        return np.sqrt(cov)
    return np.stack([linalg.cholesky(c, lower=True, check_finite=False) for c in cov])


def _e_step(X, weights, means, chol, covariance_type, eps):
    """Smoothed objective and log-responsibilities.

    Each component's complete-data term carries ``-eps/2 * tr(Sigma_k^-1)``,
    the expectation of ``log N`` when points are jittered by ``N(0, eps*I)``.
    Its exact M-step is ``Sigma_k = S_k / N_k + eps * I``, so EM on this
    objective is monotone while still regularising every covariance.
    """
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    penalty = 0.5 * eps * _trace_of_inverse(chol, covariance_type)
    weighted = _component_log_densities(X, means, chol, covariance_type) + log_w - penalty
    per_point = logsumexp(weighted, axis=1)
    return float(per_point.sum()), weighted - per_point[:, None]


def _m_step(X, resp, eps, covariance_type):
    N, n = X.shape
    nk = resp.sum(axis=0) + 10 * np.finfo(np.float64).eps
    means = (resp.T @ X) / nk[:, None]
    if covariance_type == "full":
        cov = np.empty((means.shape[0], n, n))
        for k in range(means.shape[0]):
            diff = X - means[k]
            cov[k] = (resp[:, k] * diff.T) @ diff / nk[k]
            cov[k].flat[:: n + 1] += eps
    else:
        cov = np.stack([
            (resp[:, k] @ (X - means[k]) ** 2) / nk[k] for k in range(means.shape[0])
        ]) + eps
    weights = nk / nk.sum()
    return weights, means, cov


def _kmeans_plus_plus(X, m, rng):
    N = X.shape[0]
    centers = [int(rng.integers(N))]
    d2 = ((X - X[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, m):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(N, p=d2 / total))
        else:
            idx = int(rng.integers(N))
        centers.append(idx)
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return X[centers].copy()


def regularization_for(X, reg_scale: float = 1e-6) -> float:
    """``reg_scale`` times the mean per-feature variance (``reg_scale`` if that is zero)."""
    mean_var = float(np.var(X, axis=0).mean())
    return reg_scale * mean_var if mean_var > 0 else reg_scale


def fit_em(
    X,
    m: int,
    max_iter: int = 200,
    tol: float = 1e-6,
    random_state=None,
    covariance_type: str = "full",
    reg_scale: float = 1e-6,
) -> tuple[GaussianMixture, EmReport]:
    """Fit an ``m``-component mixture to the rows of ``X``.

    Means are seeded k-means++ style from data points, every covariance
    starts at the global covariance, weights start uniform. Iteration stops
    once the objective improves by less than ``tol`` or after ``max_iter``
    rounds.
    """
    X = np.asarray(getattr(X, "X", X), dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix with at least one feature, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite values")
    if m < 1:
        raise ValueError(f"number of components must be positive, got {m}")
    if m > X.shape[0]:
        raise ValueError(f"{m} components requested for {X.shape[0]} data points")
    if covariance_type not in COVARIANCE_TYPES:
        raise ValueError(f"covariance_type must be one of {COVARIANCE_TYPES}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    rng = as_generator(random_state)
    N, n = X.shape
    eps = regularization_for(X, reg_scale)

    means = _kmeans_plus_plus(X, m, rng)
    centered = X - X.mean(axis=0)
    if covariance_type == "full":
        glob = centered.T @ centered / N
        glob.flat[:: n + 1] += eps
        cov = np.repeat(glob[None], m, axis=0)
    else:
        cov = np.repeat(((centered**2).mean(axis=0) + eps)[None], m, axis=0)
    weights = np.full(m, 1.0 / m)

    objective, log_resp = _e_step(X, weights, means, _cholesky(cov, covariance_type), covariance_type, eps)
    trace = []
    converged = False
    for _ in range(max_iter):
        weights, means, cov = _m_step(X, np.exp(log_resp), eps, covariance_type)
        chol = _cholesky(cov, covariance_type)
        new_objective, log_resp = _e_step(X, weights, means, chol, covariance_type, eps)
        trace.append(new_objective)
        gain = new_objective - objective
        objective = new_objective
        if gain < tol:
            converged = True
            break
    model = GaussianMixture(weights, means, cov, covariance_type)
    return model, EmReport(tuple(trace), len(trace), converged, eps)


def log_prob(gmm: GaussianMixture, x):
    """Log mixture density at ``x``; a float for a vector, an array for a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != gmm.n_features:
            raise ValueError(f"expected {gmm.n_features} features, got {x.shape[0]}")
        return float(gmm.score_samples(x[None])[0])
    return gmm.score_samples(x)


def kernel_probabilities(gmm: GaussianMixture, X_min) -> np.ndarray:
    """Selection probabilities proportional to mixture density over ``X_min``.

    Densities are shifted by the maximum log-probability before
    exponentiating and floored at the smallest normal float, so a very
    unlikely point keeps a tiny but non-zero chance.
    """
    lp = gmm.score_samples(np.asarray(getattr(X_min, "X", X_min), dtype=np.float64))
    if not np.any(np.isfinite(lp)):
        raise ValueError("all densities vanish; cannot weight sampling kernels")
    w = np.exp(lp - np.max(lp[np.isfinite(lp)]))
    w = np.maximum(np.nan_to_num(w, nan=0.0), np.finfo(np.float64).tiny)
    return w / w.sum()


def sample_kernels(gmm: GaussianMixture, X_min, num: int, random_state=None) -> np.ndarray:
    """Pick ``num`` distinct row indices of ``X_min``, density-weighted."""
    X = np.asarray(getattr(X_min, "X", X_min), dtype=np.float64)
    if not 0 <= num <= X.shape[0]:
        raise ValueError(f"num must be in [0, {X.shape[0]}], got {num}")
    p = kernel_probabilities(gmm, X)
    return as_generator(random_state).choice(X.shape[0], size=num, replace=False, p=p)


def top_k_by_logprob(gmm: GaussianMixture, candidates: SyntheticBatch, k: int) -> SyntheticBatch:
    """The ``k`` candidates of highest log-probability, best first.

    Ties keep the lower candidate index first. The returned batch carries the
    scores in ``log_prob``.
    """
    if not 0 <= k <= len(candidates):
        raise ValueError(f"k must be in [0, {len(candidates)}], got {k}")
    scores = gmm.score_samples(candidates.points) if len(candidates) else np.empty(0)
    order = np.lexsort((np.arange(len(candidates)), -scores))[:k]
    picked = candidates.take(order)
    return SyntheticBatch(picked.points, picked.kernel_indices, picked.radii, picked.degenerate, scores[order])


class GaussianMixtureEM(DensityMixin, BaseEstimator):
    """Estimator front-end for :func:`fit_em`.

    Parameters
    ----------
    n_components : int, default=1
    covariance_type : {'full', 'diag'}, default='full'
    max_iter : int, default=200
    tol : float, default=1e-6
    reg_scale : float, default=1e-6
        Covariance ridge as a multiple of the mean feature variance.
    random_state : int, Generator or None

    Attributes
    ----------
    model_ : GaussianMixture
    report_ : EmReport
    weights_, means_, covariances_ : ndarray
    """

    def __init__(self, n_components=1, covariance_type="full", max_iter=200, tol=1e-6,
                 reg_scale=1e-6, random_state=None):
        self.n_components = n_components
        self.covariance_type = covariance_type
        self.max_iter = max_iter
        self.tol = tol
        self.reg_scale = reg_scale
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.model_, self.report_ = fit_em(
            X, self.n_components, self.max_iter, self.tol, self.random_state,
            self.covariance_type, self.reg_scale,
        )
        self.weights_ = self.model_.weights
        self.means_ = self.model_.means
        self.covariances_ = self.model_.covariances
        self.converged_ = self.report_.converged
        self.n_iter_ = self.report_.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        return self.model_.score_samples(check_array(X, dtype=np.float64))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))
