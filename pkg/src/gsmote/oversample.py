"""GMM-guided synthetic minority oversampling (GSMOTE).

fit GMM on the minority class -> density-weighted kernel choice ->
``m_per_kernel`` hypersphere draws per kernel -> keep the ``k_select``
candidates of highest log-probability.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_X_y

from ._random import derive_seed, substream
from .dataset import Dataset, split_by_class
from .gmm import GaussianMixture, fit_em, sample_kernels, top_k_by_logprob
from .sampling import SyntheticBatch, knn, sample_hypersphere

logger = logging.getLogger(__name__)

# substream keys; kernels use (_KERNEL_STREAM, rank)
_FIT_STREAM = 0
_SELECT_STREAM = 1
_KERNEL_STREAM = 2


class InfeasibleParamsError(ValueError):
    """Parameter tuple cannot be run against the given minority set."""


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


@dataclass(frozen=True)
class GsmoteParams:
    """GMM components, kernel count, candidates per kernel, kept synthetics.

    ``k_select`` may be 0, which makes the whole pipeline a no-op.
    """

    m: int
    num: int
    m_per_kernel: int
    k_select: int
    k_neighbors: int = 5

    def check(self, n_minority: int, knn_over_kernels: bool = False) -> None:
        for name in ("m", "num", "m_per_kernel", "k_neighbors"):
            if getattr(self, name) < 1:
                raise InfeasibleParamsError(f"{name} must be positive, got {getattr(self, name)}")
        if self.k_select < 0:
            raise InfeasibleParamsError(f"k_select must be non-negative, got {self.k_select}")
        if self.k_select > self.num * self.m_per_kernel:
            raise InfeasibleParamsError(
                f"k_select={self.k_select} exceeds num*m_per_kernel={self.num * self.m_per_kernel}"
            )
        if self.num > n_minority:
            raise InfeasibleParamsError(f"num={self.num} exceeds minority size {n_minority}")
        pool = self.num if knn_over_kernels else n_minority
        if self.k_neighbors >= pool:
            raise InfeasibleParamsError(
                f"k_neighbors={self.k_neighbors} needs more than {self.k_neighbors} points, "
                f"neighbour pool has {pool}"
            )

    def as_dict(self) -> dict:
        return asdict(self)


def _kernel_candidates(X_pool, pool_index, center, count, k, rng, volume_uniform):
    nb = knn(X_pool, pool_index, k)
    pts = np.empty((count, X_pool.shape[1]))
    radii = np.empty(count)
    degen = np.zeros(count, dtype=bool)
    for j in range(count):
        pick = rng.integers(0, k)
        r = nb.radii[pick]
        radii[j] = r
        if r == 0.0:
            pts[j] = center
            degen[j] = True
        else:
            pts[j] = sample_hypersphere(center, r, rng, volume_uniform)
    return pts, radii, degen


def generate_candidates(X_min, kernels, params: GsmoteParams, seed: int,
                        knn_over_kernels=False, volume_uniform=False, n_jobs=1) -> SyntheticBatch:
    """``m_per_kernel`` hypersphere draws around each kernel, in kernel order.

    Kernel ``rank`` draws from substream ``(seed, 2, rank)`` so the batch is
    identical for any ``n_jobs``.
    """
    X = np.asarray(X_min, dtype=np.float64)
    pool = X[kernels] if knn_over_kernels else X

    def run(rank):
        idx = rank if knn_over_kernels else int(kernels[rank])
        return _kernel_candidates(
            pool, idx, X[kernels[rank]], params.m_per_kernel, params.k_neighbors,
            substream(seed, _KERNEL_STREAM, rank), volume_uniform,
        )

    ranks = range(len(kernels))
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(run, ranks))
    else:
        parts = [run(r) for r in ranks]
    if not parts:
        return SyntheticBatch.empty(X.shape[1])
    pts, radii, degen = zip(*parts)
    return SyntheticBatch(
        np.vstack(pts),
        np.repeat(np.asarray(kernels, dtype=np.intp), params.m_per_kernel),
        np.concatenate(radii),
        np.concatenate(degen),
    )


@dataclass(frozen=True)
class GsmoteResult:
    synthetic: SyntheticBatch
    candidates: int
    gmm: GaussianMixture | None
    kernels: np.ndarray
    params: GsmoteParams


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (InfeasibleParamsError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def gsmote_detailed(X_min, params: GsmoteParams, random_state=None, *, knn_over_kernels=False,
                    volume_uniform=False, covariance_type="full", n_jobs=1) -> GsmoteResult:
    """:func:`gsmote` returning the fitted mixture, kernels and candidate count too."""
    X = np.asarray(getattr(X_min, "X", X_min), dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D minority matrix, got shape {X.shape}")
    n_min = X.shape[0]
    if params.m > n_min:
        warnings.warn(
            f"m={params.m} exceeds minority size {n_min}; clamping to {n_min}", RuntimeWarning,
            stacklevel=2,
        )
        params = GsmoteParams(n_min, params.num, params.m_per_kernel, params.k_select,
                              params.k_neighbors)
    params.check(n_min, knn_over_kernels)
    seed = derive_seed(random_state)
    if params.k_select == 0:
        return GsmoteResult(SyntheticBatch.empty(X.shape[1]), 0, None, np.empty(0, dtype=np.intp), params)

    gmm, report = _stage("fit_em", fit_em, X, params.m, random_state=substream(seed, _FIT_STREAM),
                         covariance_type=covariance_type)
    logger.debug("gmm fitted in %d iterations (converged=%s)", report.iterations, report.converged)
    kernels = _stage("sample_kernels", sample_kernels, gmm, X, params.num,
                     substream(seed, _SELECT_STREAM))
    cands = _stage("generate", generate_candidates, X, kernels, params, seed,
                   knn_over_kernels, volume_uniform, n_jobs)
    kept = _stage("filter", top_k_by_logprob, gmm, cands, params.k_select)
    return GsmoteResult(kept, len(cands), gmm, kernels, params)


def gsmote(X_min, params: GsmoteParams, random_state=None, **options) -> SyntheticBatch:
    """Generate ``params.k_select`` synthetic minority points from ``X_min``.

    ``kernel_indices`` in the result refer to rows of ``X_min``. Keyword
    options are those of :func:`gsmote_detailed`.
    """
    return gsmote_detailed(X_min, params, random_state, **options).synthetic


def augment(dataset: Dataset, params: GsmoteParams, random_state=None, **options) -> Dataset:
    """``dataset`` plus GSMOTE synthetics labeled as the minority class.

    Original rows keep their order and values; synthetic rows follow them
    with ``synthetic=True``.
    """
    return augment_detailed(dataset, params, random_state, **options)[0]


def augment_detailed(dataset: Dataset, params: GsmoteParams, random_state=None, **options):
    split = split_by_class(dataset)
    result = gsmote_detailed(split.minority.X, params, random_state, **options)
    return dataset.append(result.synthetic.points, split.minority_label, synthetic=True), result


class GSMOTE(BaseEstimator):
    """Resampler with an imbalanced-learn style ``fit_resample``.

    Parameters
    ----------
    m : int, default=2
        Mixture components fitted on the minority class.
    num : int or None, default=None
        Sampling kernels; ``None`` uses every minority instance.
    m_per_kernel : int or None, default=None
        Candidates per kernel; ``None`` picks the smallest count that gives
        at least twice ``k_select`` candidates.
    k_select : int or None, default=None
        Synthetics kept; ``None`` balances the two classes.
    k_neighbors : int, default=5
    covariance_type : {'full', 'diag'}, default='full'
    knn_over_kernels : bool, default=False
        Search neighbours among the chosen kernels instead of the whole
        minority class.
    volume_uniform : bool, default=False
    random_state : int, Generator or None
    n_jobs : int, default=1

    Attributes
    ----------
    params_ : GsmoteParams actually used
    synthetic_ : SyntheticBatch
    gmm_ : GaussianMixture or None
    minority_label_ : label value oversampled
    """

    def __init__(self, m=2, num=None, m_per_kernel=None, k_select=None, k_neighbors=5,
                 covariance_type="full", knn_over_kernels=False, volume_uniform=False,
                 random_state=None, n_jobs=1):
        self.m = m
        self.num = num
        self.m_per_kernel = m_per_kernel
        self.k_select = k_select
        self.k_neighbors = k_neighbors
        self.covariance_type = covariance_type
        self.knn_over_kernels = knn_over_kernels
        self.volume_uniform = volume_uniform
        self.random_state = random_state
        self.n_jobs = n_jobs

    def resolve_params(self, n_minority: int, n_majority: int) -> GsmoteParams:
        k = n_majority - n_minority if self.k_select is None else self.k_select
        num = n_minority if self.num is None else self.num
        per = self.m_per_kernel
        if per is None:
            per = max(1, -(-2 * k // max(num, 1)))
        return GsmoteParams(self.m, num, per, k, self.k_neighbors)

    def fit_resample(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes, y_idx = np.unique(y, return_inverse=True)
        if classes.size != 2:
            raise ValueError(f"GSMOTE needs a binary target, got {classes.size} classes")
        split = split_by_class(Dataset(X, y_idx.astype(np.int64)))
        params = self.resolve_params(split.minority.size, split.majority.size)
        result = gsmote_detailed(
            split.minority.X, params, self.random_state,
            knn_over_kernels=self.knn_over_kernels, volume_uniform=self.volume_uniform,
            covariance_type=self.covariance_type, n_jobs=self.n_jobs,
        )
        self.params_ = result.params
        self.synthetic_ = result.synthetic
        self.gmm_ = result.gmm
        self.minority_label_ = classes[split.minority_label]
        self.n_features_in_ = X.shape[1]
        X_res = np.vstack([X, result.synthetic.points])
        y_res = np.concatenate([y, np.full(len(result.synthetic), self.minority_label_, dtype=y.dtype)])
        return X_res, y_res
