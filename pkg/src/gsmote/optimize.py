"""DE/rand/1/bin over GSMOTE hyperparameters.

The population evolves synchronously: trials for generation ``g`` are built
from generation ``g-1`` only, evaluated (optionally in parallel), then
greedily selected. All random draws of a generation come from substream
``(seed, g)`` and are made before any fitness call, so results depend only
on the configuration and seed.
"""

from __future__ import annotations

import logging
import math
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_X_y

from ._random import as_generator, derive_seed, substream
from .classify.elm import ELMClassifier
from .classify.metrics import accuracy, confusion
from .dataset import Dataset, split_by_class, stratified_split
from .oversample import GsmoteParams, InfeasibleParamsError, augment

logger = logging.getLogger(__name__)

GENE_NAMES = ("m", "num", "m_per_kernel", "k_select")


@dataclass(frozen=True)
class DeConfig:
    generations: int
    population: int
    mutation_factor: float
    crossover_prob: float
    lower_bound: tuple[float, ...]
    upper_bound: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower_bound)
        hi = tuple(float(v) for v in self.upper_bound)
        object.__setattr__(self, "lower_bound", lo)
        object.__setattr__(self, "upper_bound", hi)
        if self.generations < 1:
            raise ValueError("generations must be at least 1")
        if self.population < 4:
            raise ValueError("population must be at least 4 (mutation needs three others)")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must be in [0, 1]")
        if not self.mutation_factor >= 0:
            raise ValueError("mutation_factor must be non-negative")
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper bounds must be non-empty and equally long")
        if not all(math.isfinite(a) and math.isfinite(b) and a <= b for a, b in zip(lo, hi)):
            raise ValueError("bounds must be finite with lower <= upper")

    @property
    def dims(self) -> int:
        return len(self.lower_bound)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lower_bound), np.array(self.upper_bound)


@dataclass
class DeResult:
    best: np.ndarray
    best_fitness: float
    history: list[float]
    best_per_generation: list[np.ndarray]
    population: np.ndarray
    fitness: np.ndarray
    evaluations: int = 0
    wall_times: list[float] = field(default_factory=list)


def de_initialize(config: DeConfig, random_state=None) -> np.ndarray:
    lo, hi = config.bounds
    rng = as_generator(random_state)
    return lo + rng.random((config.population, config.dims)) * (hi - lo)


def de_mutate(r1, r2, r3, f: float, lower=None, upper=None) -> np.ndarray:
    donor = np.asarray(r1, dtype=np.float64) + f * (np.asarray(r2, dtype=np.float64) - np.asarray(r3, dtype=np.float64))
    if lower is not None or upper is not None:
        donor = np.clip(donor, lower, upper)
    return donor


def de_crossover(target, donor, cr: float, random_state) -> np.ndarray:
    """Binomial crossover with one forced donor gene.

    Draw order: ``j_rand`` (one integer), then ``D`` uniforms.
    """
    target = np.asarray(target, dtype=np.float64)
    donor = np.asarray(donor, dtype=np.float64)
    if target.shape != donor.shape:
        raise ValueError("target and donor dimensions differ")
    rng = as_generator(random_state)
    j_rand = rng.integers(target.shape[0])
    take = rng.random(target.shape[0]) <= cr
    take[j_rand] = True
    return np.where(take, donor, target)


def de_select(trial_fitness: float, incumbent_fitness: float) -> bool:
    """Replace only on strict improvement."""
    return trial_fitness > incumbent_fitness


def _safe(fitness):
    def call(x):
        try:
            v = float(fitness(x))
        except Exception as exc:  # fitness must never stop the search
            warnings.warn(f"fitness raised {exc!r}; scoring 0", RuntimeWarning, stacklevel=2)
            return 0.0
        if math.isnan(v):
            warnings.warn("fitness returned NaN; scoring 0", RuntimeWarning, stacklevel=2)
            return 0.0
        return v
    return call


def _pick_three(rng, n):
    # random keys per row; the target's own key is pushed to the end
    keys = rng.random((n, n))
    keys[np.arange(n), np.arange(n)] = np.inf
    return np.argsort(keys, axis=1)[:, :3]


def de_optimize(
    fitness: Callable[[np.ndarray], float],
    config: DeConfig,
    random_state=None,
    n_jobs: int = 1,
    x0=None,
    callback=None,
) -> DeResult:
    """Maximise ``fitness`` over the box in ``config``.

    ``x0``, if given, replaces the first member of the initial population.
    ``callback(generation, best_vector, best_fitness)`` runs after each
    generation's selection.
    """
    seed = derive_seed(random_state)
    lo, hi = config.bounds
    call = _safe(fitness)
    pop = de_initialize(config, substream(seed, 0))
    if x0 is not None:
        pop[0] = np.clip(np.asarray(x0, dtype=np.float64), lo, hi)

    pool = ThreadPoolExecutor(max_workers=n_jobs) if n_jobs and n_jobs > 1 else None

    def evaluate(rows):
        return np.array(list(pool.map(call, rows)) if pool else [call(r) for r in rows])

    try:
        fit = evaluate(pop)
        evals = len(pop)
        history, bests, times = [], [], []
        N = config.population
        for g in range(1, config.generations + 1):
            t0 = time.perf_counter()
            rng = substream(seed, g)
            picks = _pick_three(rng, N)
            trials = np.empty_like(pop)
            for i in range(N):
                r1, r2, r3 = picks[i]
                donor = de_mutate(pop[r1], pop[r2], pop[r3], config.mutation_factor, lo, hi)
                trials[i] = de_crossover(pop[i], donor, config.crossover_prob, rng)
            trial_fit = evaluate(trials)
            evals += N
            for i in range(N):
                if de_select(trial_fit[i], fit[i]):
                    pop[i] = trials[i]
                    fit[i] = trial_fit[i]
            b = int(np.argmax(fit))
            history.append(float(fit[b]))
            bests.append(pop[b].copy())
            times.append(time.perf_counter() - t0)
            if callback is not None:
                callback(g, pop[b].copy(), float(fit[b]))
    finally:
        if pool:
            pool.shutdown()
    b = int(np.argmax(fit))
    return DeResult(pop[b].copy(), float(fit[b]), history, bests, pop, fit, evals, times)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def decode_genes(genes, n_minority: int, k_neighbors: int = 5) -> GsmoteParams:
    """Round genes half-up, then clamp into the feasible region.

    ``m >= 1``, ``num`` in ``[1, n_minority]``, ``m_per_kernel >= 1`` and
    ``k_select`` in ``[0, num * m_per_kernel]``.
    """
    m, num, per, k = (_round_half_up(float(g)) for g in genes)
    m = max(m, 1)
    num = min(max(num, 1), n_minority)
    per = max(per, 1)
    k = min(max(k, 0), num * per)
    return GsmoteParams(m, num, per, k, k_neighbors)


def encode_params(params: GsmoteParams) -> np.ndarray:
    return np.array([params.m, params.num, params.m_per_kernel, params.k_select], dtype=np.float64)


class GsmoteFitness:
    """ELM accuracy on ``evaluation`` after augmenting ``train`` with GSMOTE.

    Fitness is cached per decoded tuple, and each tuple's GSMOTE and ELM
    randomness comes from substream ``(seed, *tuple)``, so equal tuples score
    equally. Infeasible tuples score 0.
    """

    def __init__(self, train: Dataset, evaluation: Dataset, seed: int, hidden=64, ridge=1e-3,
                 k_neighbors=5, gsmote_options=None):
        self.train = train
        self.evaluation = evaluation
        self.seed = seed
        self.hidden = hidden
        self.ridge = ridge
        split = split_by_class(train)
        self.n_minority = split.minority.size
        self.minority_label = split.minority_label
        self.k_neighbors = min(k_neighbors, self.n_minority - 1)
        self.gsmote_options = dict(gsmote_options or {})
        self.cache: dict[tuple[int, ...], float] = {}
        self._lock = threading.Lock()

    def decode(self, genes) -> GsmoteParams:
        return decode_genes(genes, self.n_minority, self.k_neighbors)

    def score_params(self, params: GsmoteParams) -> float:
        key = (params.m, params.num, params.m_per_kernel, params.k_select)
        with self._lock:
            if key in self.cache:
                return self.cache[key]
        value = self._evaluate(params, key)
        with self._lock:
            self.cache[key] = value
        return value

    def _evaluate(self, params, key) -> float:
        if self.k_neighbors < 1:
            return 0.0
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                aug = augment(self.train, params, substream(self.seed, 1, *key), **self.gsmote_options)
        except (InfeasibleParamsError, ValueError, RuntimeError) as exc:
            logger.debug("tuple %s infeasible: %s", key, exc)
            return 0.0
        clf = ELMClassifier(self.hidden, self.ridge, substream(self.seed, 2, *key))
        clf.fit(aug.X, aug.y)
        pred = clf.predict(self.evaluation.X)
        cm = confusion(pred, self.evaluation.y, self.minority_label,
                       labels=sorted(self.train.class_ids | self.evaluation.class_ids))
        return accuracy(cm)

    def __call__(self, genes) -> float:
        return self.score_params(self.decode(genes))


def gsmote_fitness(genes, train: Dataset, test: Dataset, seed: int = 0, hidden=64, ridge=1e-3,
                   k_neighbors=5) -> float:
    """One-off fitness evaluation; see :class:`GsmoteFitness`."""
    return GsmoteFitness(train, test, seed, hidden, ridge, k_neighbors)(genes)


def default_bounds(n_minority: int, n_majority: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Search box for ``(m, num, m_per_kernel, k_select)``."""
    gap = max(n_majority - n_minority, 1)
    return (1.0, 1.0, 1.0, 0.0), (5.0, float(n_minority), 10.0, float(gap))


class GsmoteTuner(BaseEstimator):
    """Tune GSMOTE hyperparameters with differential evolution.

    By default fitness is measured on a stratified validation split carved
    from the training data; pass ``X_eval, y_eval`` to :meth:`fit` to score on
    a dataset of your choice instead (e.g. a held-out test set).

    Parameters
    ----------
    generations, population, mutation_factor, crossover_prob :
        Differential evolution controls.
    lower_bound, upper_bound : sequence of 4 floats or None
        Box for ``(m, num, m_per_kernel, k_select)``; ``None`` uses
        :func:`default_bounds`.
    hidden, ridge : ELM settings for the fitness classifier.
    k_neighbors : int
    validation_fraction : float
    x0 : GsmoteParams or None
        Seed the initial population with this tuple.
    random_state, n_jobs

    Attributes
    ----------
    best_params_ : GsmoteParams
    best_fitness_ : float
    history_ : list of float
    result_ : DeResult
    """

    def __init__(self, generations=20, population=10, mutation_factor=0.8, crossover_prob=0.9,
                 lower_bound=None, upper_bound=None, hidden=64, ridge=1e-3, k_neighbors=5,
                 validation_fraction=0.25, x0=None, random_state=None, n_jobs=1):
        self.generations = generations
        self.population = population
        self.mutation_factor = mutation_factor
        self.crossover_prob = crossover_prob
        self.lower_bound = lower_bound
        self.upper_bound = upper_bound
        self.hidden = hidden
        self.ridge = ridge
        self.k_neighbors = k_neighbors
        self.validation_fraction = validation_fraction
        self.x0 = x0
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y, X_eval=None, y_eval=None, callback=None):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes, y_idx = np.unique(y, return_inverse=True)
        data = Dataset(X, y_idx.astype(np.int64), label_names=tuple(map(str, classes)))
        seed = derive_seed(self.random_state)
        if X_eval is None:
            train, evaluation = stratified_split(data, self.validation_fraction, substream(seed, 0))
        else:
            X_eval, y_eval = check_X_y(X_eval, y_eval, dtype=np.float64)
            lookup = {c: i for i, c in enumerate(classes.tolist())}
            train = data
            evaluation = Dataset(X_eval, np.array([lookup[v] for v in y_eval.tolist()], dtype=np.int64),
                                 label_names=data.label_names)
        self.fitness_ = GsmoteFitness(train, evaluation, derive_seed(substream(seed, 1)),
                                      self.hidden, self.ridge, self.k_neighbors)
        split = split_by_class(train)
        lo, hi = default_bounds(split.minority.size, split.majority.size)
        config = DeConfig(
            self.generations, self.population, self.mutation_factor, self.crossover_prob,
            lo if self.lower_bound is None else tuple(self.lower_bound),
            hi if self.upper_bound is None else tuple(self.upper_bound),
        )
        x0 = None if self.x0 is None else encode_params(self.x0)
        self.result_ = de_optimize(self.fitness_, config, substream(seed, 2), self.n_jobs, x0, callback)
        self.config_ = config
        self.best_params_ = self.fitness_.decode(self.result_.best)
        self.best_fitness_ = self.result_.best_fitness
        self.history_ = self.result_.history
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        return self
