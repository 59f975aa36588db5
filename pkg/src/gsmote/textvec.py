"""Bug-report text to TF-IDF feature vectors.

Pipeline: tokenize -> drop stop words -> Porter stem -> count -> TF x IDF.
The vocabulary is built after stemming and kept in sorted order, so the
column layout does not depend on token order inside documents.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from nltk.stem.porter import PorterStemmer
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS
from sklearn.utils.validation import check_is_fitted

STOP_WORDS: frozenset[str] = frozenset(ENGLISH_STOP_WORDS)

_TOKEN = re.compile(r"[a-z0-9]+")
_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def tokenize(text: str) -> list[str]:
    """Lower-case ``text`` and split it into ``[a-z0-9]+`` runs."""
    return _TOKEN.findall(text.lower())


def remove_stopwords(tokens: Sequence[str], stoplist: Iterable[str] = STOP_WORDS) -> list[str]:
    stop = stoplist if isinstance(stoplist, (set, frozenset)) else frozenset(stoplist)
    return [t for t in tokens if t not in stop]


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Porter stem of ``token``, iterated to a fixed point.

    A single Porter pass is not idempotent on some inputs (``'nthlyase'``
    -> ``'nthlyas'`` -> ``'nthlya'``); repeating until the output stops
    changing makes ``stem(stem(t)) == stem(t)`` hold.
    """
    seen = {token}
    cur = token
    while True:
        nxt = _stemmer.stem(cur)
        if nxt == cur or nxt in seen:
            return nxt
        seen.add(nxt)
        cur = nxt


def load_stopwords(path) -> frozenset[str]:
    """One term per line; blank lines and ``#`` comments ignored."""
    with open(path, encoding="utf-8") as fh:
        words = (line.strip().lower() for line in fh)
        return frozenset(w for w in words if w and not w.startswith("#"))


def term_frequency(raw_count: int, doc_total: int) -> float:
    if doc_total <= 0:
        raise ValueError("document has no terms")
    if not 0 <= raw_count <= doc_total:
        raise ValueError(f"raw_count {raw_count} outside [0, {doc_total}]")
    return raw_count / doc_total


def inverse_document_frequency(df: int, m_docs: int) -> float:
    """Natural-log IDF, ``ln(m_docs / df)``."""
    if df <= 0:
        raise ValueError("term does not occur in the corpus (df = 0)")
    if df > m_docs:
        raise ValueError(f"df {df} exceeds number of documents {m_docs}")
    return math.log(m_docs / df)


def preprocess(text: str, stoplist: Iterable[str] = STOP_WORDS) -> list[str]:
    return [stem(t) for t in remove_stopwords(tokenize(text), stoplist)]


@dataclass(frozen=True)
class Corpus:
    documents: tuple[tuple[str, ...], ...]
    vocabulary: dict[str, int]
    doc_freq: dict[str, int]

    @property
    def n_documents(self) -> int:
        return len(self.documents)


def build_corpus(
    texts: Iterable[str],
    stoplist: Iterable[str] = STOP_WORDS,
    prune_singletons: bool = False,
) -> Corpus:
    """Preprocess ``texts`` and index their vocabulary.

    With ``prune_singletons`` terms found in exactly one document are dropped
    from the vocabulary (the documents themselves keep them, which affects
    the TF denominator exactly as the raw counts would).
    """
    stop = frozenset(stoplist)
    docs = tuple(tuple(preprocess(t, stop)) for t in texts)
    df: Counter[str] = Counter()
    for d in docs:
        df.update(set(d))
    terms = sorted(t for t, c in df.items() if c > 1 or not prune_singletons)
    return Corpus(docs, {t: i for i, t in enumerate(terms)}, {t: df[t] for t in terms})


def _tf_idf(documents, vocabulary, idf) -> np.ndarray:
    out = np.zeros((len(documents), len(vocabulary)))
    for j, doc in enumerate(documents):
        if not doc:
            continue
        total = len(doc)
        for term, count in Counter(doc).items():
            col = vocabulary.get(term)
            if col is not None:
                out[j, col] = term_frequency(count, total) * idf[col]
    return out


def vectorize(corpus: Corpus) -> np.ndarray:
    """Dense ``(n_documents, n_terms)`` TF-IDF matrix in vocabulary order."""
    if corpus.n_documents == 0:
        raise ValueError("corpus has no documents")
    if not corpus.vocabulary:
        raise ValueError("corpus vocabulary is empty (all documents empty after preprocessing)")
    m = corpus.n_documents
    idf = np.array([inverse_document_frequency(corpus.doc_freq[t], m) for t in corpus.vocabulary])
    return _tf_idf(corpus.documents, corpus.vocabulary, idf)


class TfIdfVectorizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`build_corpus` and :func:`vectorize`.

    Parameters
    ----------
    stop_words : iterable of str or None, default=None
        ``None`` uses the embedded English list; pass ``()`` to keep all tokens.
    prune_singletons : bool, default=False

    Attributes
    ----------
    vocabulary_ : dict mapping stemmed term to column
    idf_ : ndarray of shape (n_terms,)
    """

    def __init__(self, stop_words=None, prune_singletons=False):
        self.stop_words = stop_words
        self.prune_singletons = prune_singletons

    def _stoplist(self):
        return STOP_WORDS if self.stop_words is None else frozenset(self.stop_words)

    def fit(self, raw_documents, y=None):
        corpus = build_corpus(raw_documents, self._stoplist(), self.prune_singletons)
        if not corpus.vocabulary:
            raise ValueError("empty vocabulary; documents contain only stop words or punctuation")
        self.vocabulary_ = corpus.vocabulary
        self.idf_ = np.array(
            [inverse_document_frequency(corpus.doc_freq[t], corpus.n_documents) for t in corpus.vocabulary]
        )
        self.n_features_in_ = 1
        self._fit_corpus = corpus
        return self

    def transform(self, raw_documents):
        check_is_fitted(self, "vocabulary_")
        stop = self._stoplist()
        docs = [preprocess(t, stop) for t in raw_documents]
        return _tf_idf(docs, self.vocabulary_, self.idf_)

    def fit_transform(self, raw_documents, y=None):
        self.fit(raw_documents)
        return _tf_idf(self._fit_corpus.documents, self.vocabulary_, self.idf_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(list(self.vocabulary_), dtype=object)


def read_documents(path, fmt: str | None = None, labels_path=None) -> tuple[list[str], list[str] | None]:
    """Read raw documents and optional labels.

    ``fmt='lines'``: one document per line; labels come from ``labels_path``
    (one per line) if given. ``fmt='csv'``: headed two-column CSV
    ``(text, label)``. ``None`` picks ``csv`` for ``.csv`` files.
    """
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.lower().endswith(".csv") else "lines"
    if fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if not rows:
            return [], []
        body = rows[1:]
        bad = [i + 2 for i, r in enumerate(body) if len(r) != 2]
        if bad:
            raise ValueError(f"{path}: rows {bad[:5]} do not have exactly 2 columns (text, label)")
        return [r[0] for r in body], [r[1].strip() for r in body]
    if fmt != "lines":
        raise ValueError(f"unknown document format {fmt!r}")
    with open(path, encoding="utf-8") as fh:
        docs = fh.read().splitlines()
    labels = None
    if labels_path is not None:
        with open(labels_path, encoding="utf-8") as fh:
            labels = [s.strip() for s in fh.read().splitlines()]
        if len(labels) != len(docs):
            raise ValueError(f"{len(docs)} documents but {len(labels)} labels")
    return docs, labels
