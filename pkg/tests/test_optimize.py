import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsmote._random import substream
from gsmote.classify import ELMClassifier, accuracy, confusion
from gsmote.dataset import stratified_split
from gsmote.optimize import (
    DeConfig,
    GsmoteFitness,
    GsmoteTuner,
    de_crossover,
    de_initialize,
    de_mutate,
    de_optimize,
    de_select,
    decode_genes,
    default_bounds,
    encode_params,
    gsmote_fitness,
)
from gsmote.oversample import GsmoteParams

from conftest import make_binary


def sphere(x):
    return -float(np.sum(np.asarray(x) ** 2))


BOX = DeConfig(10, 8, 0.8, 0.9, (-5.0, -5.0, -5.0), (5.0, 5.0, 5.0))


def test_config_validation():
    with pytest.raises(ValueError):
        DeConfig(1, 3, 0.5, 0.5, (0,), (1,))
    with pytest.raises(ValueError):
        DeConfig(1, 4, 0.5, 1.5, (0,), (1,))
    with pytest.raises(ValueError):
        DeConfig(1, 4, 0.5, 0.5, (2,), (1,))
    with pytest.raises(ValueError):
        DeConfig(0, 4, 0.5, 0.5, (0,), (1,))


def test_initial_population_in_box():
    pop = de_initialize(BOX, 0)
    assert pop.shape == (8, 3)
    assert np.all(pop >= -5) and np.all(pop <= 5)


def test_mutation_formula_and_clamp():
    r1, r2, r3 = np.array([1.0, 2.0]), np.array([3.0, 0.0]), np.array([1.0, 1.0])
    np.testing.assert_allclose(de_mutate(r1, r2, r3, 0.5), [2.0, 1.5])
    np.testing.assert_allclose(de_mutate(r1, r2, r3, 10, [0, 0], [5, 5]), [5.0, 0.0])


def test_crossover_keeps_forced_gene():
    target, donor = np.zeros(6), np.ones(6)
    for seed in range(50):
        child = de_crossover(target, donor, 0.0, seed)
        assert child.sum() == 1.0
    np.testing.assert_array_equal(de_crossover(target, donor, 1.0, 0), donor)


def test_crossover_draw_order():
    rng = np.random.default_rng(9)
    j = rng.integers(5)
    take = rng.random(5) <= 0.5
    take[j] = True
    expected = np.where(take, 1.0, 0.0)
    np.testing.assert_array_equal(de_crossover(np.zeros(5), np.ones(5), 0.5, 9), expected)


def test_selection_strict():
    assert de_select(0.6, 0.5)
    assert not de_select(0.5, 0.5)
    assert not de_select(0.4, 0.5)


def test_first_generation_replay():
    cfg = DeConfig(1, 6, 0.7, 0.8, (-3.0, -3.0), (3.0, 3.0))
    res = de_optimize(sphere, cfg, 21)
    pop = de_initialize(cfg, substream(21, 0))
    fit = np.array([sphere(p) for p in pop])
    rng = substream(21, 1)
    keys = rng.random((6, 6))
    keys[np.arange(6), np.arange(6)] = np.inf
    picks = np.argsort(keys, axis=1)[:, :3]
    lo, hi = cfg.bounds
    # synchronous: every donor comes from the previous generation
    trials = [de_crossover(pop[i], de_mutate(*pop[picks[i]], 0.7, lo, hi), 0.8, rng)
              for i in range(6)]
    for i, trial in enumerate(trials):
        if sphere(trial) > fit[i]:
            pop[i], fit[i] = trial, sphere(trial)
    np.testing.assert_array_equal(res.population, pop)
    assert res.best_fitness == fit.max()


def test_constant_fitness_keeps_initial_population():
    res = de_optimize(lambda x: 1.0, BOX, 3)
    np.testing.assert_array_equal(res.population, de_initialize(BOX, substream(3, 0)))
    assert res.history == [1.0] * BOX.generations


@pytest.mark.parametrize("seed", range(5))
def test_history_monotone_and_in_box(seed):
    res = de_optimize(sphere, BOX, seed)
    assert len(res.history) == BOX.generations
    assert np.all(np.diff(res.history) >= 0)
    assert np.all(res.population >= -5) and np.all(res.population <= 5)
    assert res.evaluations == BOX.population * (BOX.generations + 1)


def test_fitness_exceptions_score_zero():
    calls = []

    def flaky(x):
        calls.append(1)
        if len(calls) % 3 == 0:
            raise RuntimeError("boom")
        return float("nan") if len(calls) % 5 == 0 else -1.0

    with pytest.warns(RuntimeWarning):
        res = de_optimize(flaky, DeConfig(2, 5, 0.5, 0.5, (0.0,), (1.0,)), 0)
    assert res.best_fitness == 0.0


def test_thread_count_does_not_change_result():
    a = de_optimize(sphere, BOX, 8, n_jobs=1)
    b = de_optimize(sphere, BOX, 8, n_jobs=4)
    np.testing.assert_array_equal(a.population, b.population)
    assert a.history == b.history


def test_x0_seeds_population():
    res = de_optimize(sphere, DeConfig(1, 5, 0.5, 0.5, (-5.0,), (5.0,)), 0, x0=[0.0])
    assert res.best_fitness == 0.0


def test_callback_invoked_per_generation():
    seen = []
    de_optimize(sphere, BOX, 0, callback=lambda g, x, f: seen.append((g, f)))
    assert [g for g, _ in seen] == list(range(1, BOX.generations + 1))


@pytest.mark.parametrize(
    "genes, expected",
    [
        ((2.5, 3.49, 0.2, 100.0), (3, 3, 1, 3)),
        ((-4, 999, 2, -3), (1, 10, 2, 0)),
        ((1.4, 4.5, 2.5, 7.5), (1, 5, 3, 8)),
    ],
)
def test_decode_examples(genes, expected):
    p = decode_genes(genes, 10)
    assert (p.m, p.num, p.m_per_kernel, p.k_select) == expected


@given(st.integers(1, 5), st.integers(1, 50), st.integers(1, 10), st.integers(0, 500))
def test_encode_decode_round_trip(m, num, per, k):
    k = min(k, num * per)
    p = GsmoteParams(m, num, per, k)
    assert decode_genes(encode_params(p), 50) == p


@settings(max_examples=100)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.integers(1, 60))
def test_decoded_always_feasible(genes, n_min):
    p = decode_genes(genes, n_min, k_neighbors=min(5, n_min - 1) or 1)
    assert p.m >= 1 and 1 <= p.num <= n_min and p.m_per_kernel >= 1
    assert 0 <= p.k_select <= p.num * p.m_per_kernel


@pytest.fixture(scope="module")
def split_data():
    return stratified_split(make_binary(200, 40, shift=1.5), 0.25, 0)


def test_zero_k_scores_the_plain_classifier(split_data):
    train, test = split_data
    fit = GsmoteFitness(train, test, seed=4)
    score = fit((2, 10, 2, 0))
    clf = ELMClassifier(random_state=substream(4, 2, 2, 10, 2, 0)).fit(train.X, train.y)
    assert score == accuracy(confusion(clf.predict(test.X), test.y, 1))


def test_fitness_in_unit_interval_and_cached(split_data):
    train, test = split_data
    fit = GsmoteFitness(train, test, seed=0)
    v = fit((2.2, 20.4, 3, 60))
    assert 0.0 <= v <= 1.0
    assert fit((1.6, 19.6, 3.4, 59.7)) == v
    assert len(fit.cache) == 1
    assert gsmote_fitness((2, 20, 3, 60), train, test, seed=0) == v


def test_fitness_thread_safe(split_data):
    train, test = split_data
    fit = GsmoteFitness(train, test, seed=0)
    out = []
    threads = [threading.Thread(target=lambda: out.append(fit((2, 15, 2, 20)))) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(out)) == 1


def test_default_bounds():
    assert default_bounds(30, 100) == ((1.0, 1.0, 1.0, 0.0), (5.0, 30.0, 10.0, 70.0))


def test_tuner_not_worse_than_default(split_data):
    train, test = split_data
    default = GsmoteParams(2, 30, 6, 90)
    tuner = GsmoteTuner(generations=3, population=6, x0=default, random_state=1)
    tuner.fit(train.X, train.y, test.X, test.y)
    assert tuner.best_fitness_ >= tuner.fitness_.score_params(default)
    assert len(tuner.history_) == 3
    assert np.all(np.diff(tuner.history_) >= 0)


def test_tuner_deterministic(split_data):
    train, _ = split_data
    a = GsmoteTuner(generations=2, population=4, random_state=5).fit(train.X, train.y)
    b = GsmoteTuner(generations=2, population=4, random_state=5, n_jobs=3).fit(train.X, train.y)
    assert a.best_params_ == b.best_params_ and a.history_ == b.history_
