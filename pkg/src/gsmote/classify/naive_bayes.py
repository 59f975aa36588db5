from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class GaussianNaiveBayes(ClassifierMixin, BaseEstimator):
    """Gaussian naive Bayes with empirical class priors.

    Per-class feature variances are the maximum-likelihood estimates, floored
    at ``var_floor``.
    """

    def __init__(self, var_floor=1e-9):
        self.var_floor = var_floor

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        counts = np.bincount(y_idx, minlength=self.classes_.size)
        self.class_prior_ = counts / counts.sum()
        self.theta_ = np.stack([X[y_idx == c].mean(axis=0) for c in range(self.classes_.size)])
        self.var_ = np.maximum(
            np.stack([X[y_idx == c].var(axis=0) for c in range(self.classes_.size)]),
            self.var_floor,
        )
        return self

    def joint_log_likelihood(self, X):
        check_is_fitted(self, "theta_")
        X = check_array(X, dtype=np.float64)
        ll = -0.5 * (
            np.log(2.0 * np.pi * self.var_).sum(axis=1)
            + (((X[:, None, :] - self.theta_) ** 2) / self.var_).sum(axis=2)
        )
        return ll + np.log(self.class_prior_)

    def predict(self, X):
        return self.classes_[np.argmax(self.joint_log_likelihood(X), axis=1)]


def gnb_train(X, y, var_floor=1e-9) -> GaussianNaiveBayes:
    return GaussianNaiveBayes(var_floor).fit(X, y)


def gnb_predict(model: GaussianNaiveBayes, x):
    return model.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
