"""GMM-guided synthetic minority oversampling with differential-evolution tuning."""

from .classify import ELMClassifier, GaussianNaiveBayes, classification_report
from .dataset import Dataset, imbalance_degree, load_csv, split_by_class, stratified_split, write_csv
from .gmm import GaussianMixture, GaussianMixtureEM, fit_em
from .optimize import DeConfig, GsmoteTuner, de_optimize
from .oversample import GSMOTE, GsmoteParams, augment, gsmote
from .textvec import TfIdfVectorizer

__version__ = "0.1.0"

__all__ = [
    "DeConfig",
    "Dataset",
    "ELMClassifier",
    "GSMOTE",
    "GaussianMixture",
    "GaussianMixtureEM",
    "GaussianNaiveBayes",
    "GsmoteParams",
    "GsmoteTuner",
    "TfIdfVectorizer",
    "augment",
    "classification_report",
    "de_optimize",
    "fit_em",
    "gsmote",
    "imbalance_degree",
    "load_csv",
    "split_by_class",
    "stratified_split",
    "write_csv",
]
