import numpy as np
import pytest

from gsmote.dataset import Dataset


def make_binary(n_major, n_minor, n_features=2, shift=3.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.standard_normal((n_major, n_features)),
        rng.standard_normal((n_minor, n_features)) + shift,
    ])
    y = np.r_[np.zeros(n_major, dtype=np.int64), np.ones(n_minor, dtype=np.int64)]
    return Dataset(X, y, label_names=("maj", "min"))


@pytest.fixture
def binary_data():
    return make_binary(120, 30)


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
