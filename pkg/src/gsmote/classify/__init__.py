from .elm import ELMClassifier, elm_predict, elm_train
from .metrics import (
    ConfusionMatrix,
    UndefinedMetricWarning,
    accuracy,
    classification_report,
    confusion,
    f_measure,
    precision,
    recall,
    weighted_f,
)
from .naive_bayes import GaussianNaiveBayes, gnb_predict, gnb_train

__all__ = [
    "ConfusionMatrix",
    "ELMClassifier",
    "GaussianNaiveBayes",
    "UndefinedMetricWarning",
    "accuracy",
    "classification_report",
    "confusion",
    "elm_predict",
    "elm_train",
    "f_measure",
    "gnb_predict",
    "gnb_train",
    "precision",
    "recall",
    "weighted_f",
]
