"""Extreme Learning Machine classifier.

Single hidden sigmoid layer with frozen random weights; the output layer is
the ridge least-squares fit to one-hot targets.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .._random import as_generator


class ELMClassifier(ClassifierMixin, BaseEstimator):
    """
    Parameters
    ----------
    hidden : int, default=64
        Number of hidden units.
    ridge : float, default=1e-3
        Tikhonov term added to ``H^T H``; must be positive.
    random_state : int, Generator or None

    Attributes
    ----------
    classes_ : ndarray
    input_weights_ : ndarray of shape (hidden, n_features)
        Drawn uniformly from (-1, 1).
    biases_ : ndarray of shape (hidden,)
    output_weights_ : ndarray of shape (hidden, n_classes)
    """

    def __init__(self, hidden=64, ridge=1e-3, random_state=None):
        self.hidden = hidden
        self.ridge = ridge
        self.random_state = random_state

    def _hidden(self, X):
        return expit(X @ self.input_weights_.T + self.biases_)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if self.hidden < 1:
            raise ValueError(f"hidden must be at least 1, got {self.hidden}")
        if not self.ridge > 0:
            raise ValueError(f"ridge must be positive, got {self.ridge}")
        rng = as_generator(self.random_state)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        self.input_weights_ = rng.uniform(-1.0, 1.0, size=(self.hidden, X.shape[1]))
        self.biases_ = rng.uniform(-1.0, 1.0, size=self.hidden)
        H = self._hidden(X)
        targets = np.zeros((X.shape[0], self.classes_.size))
        targets[np.arange(X.shape[0]), y_idx] = 1.0
        gram = H.T @ H
        gram.flat[:: self.hidden + 1] += self.ridge
        self.output_weights_ = linalg.solve(gram, H.T @ targets, assume_a="pos")
        return self

    def decision_function(self, X):
        check_is_fitted(self, "output_weights_")
        X = check_array(X, dtype=np.float64)
        return self._hidden(X) @ self.output_weights_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def elm_train(X, y, hidden=64, ridge=1e-3, random_state=None) -> ELMClassifier:
    return ELMClassifier(hidden, ridge, random_state).fit(X, y)


def elm_predict(model: ELMClassifier, x):
    """Label for a single feature vector."""
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
