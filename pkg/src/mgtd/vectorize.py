"""Sparse TF-IDF featurization.

Fitting learns a vocabulary and smoothed idf weights from the training
partition only; transforming any document is then independent of every
other document.  Vocabulary columns are dense and lexicographically
ordered, which makes fitted models reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from mgtd.errors import EmptyTrainingSet
from mgtd.textstats import tokenize

DEFAULT_MAX_FEATURES = 50_000


@dataclass(frozen=True)
class TfidfConfig:
    min_df: int = 1
    max_features: int | None = DEFAULT_MAX_FEATURES
    sublinear_tf: bool = False
    norm: str = "l2"
    ngram_range: tuple[int, int] = (1, 1)

    def __post_init__(self) -> None:
        if self.min_df < 1:
            raise ValueError(f"min_df {self.min_df} < 1")
        if self.norm not in ("l2", "none"):
            raise ValueError(f"norm must be 'l2' or 'none', got {self.norm!r}")
        lo, hi = self.ngram_range
        if not (1 <= lo <= hi <= 2):
            raise ValueError(f"ngram_range {self.ngram_range} outside (1,1)..(1,2)")

    def as_dict(self) -> dict:
        return {
            "min_df": self.min_df,
            "max_features": self.max_features,
            "sublinear_tf": self.sublinear_tf,
            "norm": self.norm,
            "ngram_range": list(self.ngram_range),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfidfConfig":
        return cls(
            min_df=data["min_df"],
            max_features=data["max_features"],
            sublinear_tf=data["sublinear_tf"],
            norm=data["norm"],
            ngram_range=tuple(data["ngram_range"]),
        )


@dataclass(frozen=True)
class SparseVector:
    """Sorted-index sparse row; the zero vector has empty arrays."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values length mismatch")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2)))


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    config: TfidfConfig = field(default_factory=TfidfConfig)

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def as_dict(self) -> dict:
        terms = sorted(self.vocabulary, key=self.vocabulary.get)
        return {
            "terms": terms,
            "idf": [float(x) for x in self.idf],
            "config": self.config.as_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfidfModel":
        vocabulary = {term: i for i, term in enumerate(data["terms"])}
        return cls(
            vocabulary=vocabulary,
            idf=np.asarray(data["idf"], dtype=np.float64),
            config=TfidfConfig.from_dict(data["config"]),
        )


def _terms(text: str, ngram_range: tuple[int, int]) -> list[str]:
    tokens = tokenize(text)
    lo, hi = ngram_range
    if hi == 1:
        return tokens
    out = list(tokens) if lo == 1 else []
    out.extend(
        f"{tokens[i]} {tokens[i + 1]}" for i in range(len(tokens) - 1)
    )
    return out


def _doc_text(doc) -> str:
    return doc.text if hasattr(doc, "text") else doc


def fit_tfidf(train_docs, config: TfidfConfig | None = None) -> TfidfModel:
    """Learn vocabulary and idf from the training documents.

    Terms below min_df are dropped; if max_features is set, the most
    frequent terms by total corpus count survive, ties going to the
    lexicographically smaller term.  idf(t) = ln((1+N)/(1+df(t))) + 1.
    """
    config = config or TfidfConfig()
    texts = [_doc_text(d) for d in train_docs]
    if not any(t.strip() for t in texts):
        raise EmptyTrainingSet("fit_tfidf needs at least one non-empty document")

    df: dict[str, int] = {}
    cf: dict[str, int] = {}
    n_docs = len(texts)
    for text in texts:
        terms = _terms(text, config.ngram_range)
        for term in terms:
            cf[term] = cf.get(term, 0) + 1
        for term in set(terms):
            df[term] = df.get(term, 0) + 1

    kept = [t for t, d in df.items() if d >= config.min_df]
    if config.max_features is not None and len(kept) > config.max_features:
        kept.sort(key=lambda t: (-cf[t], t))
        kept = kept[: config.max_features]
    kept.sort()

    vocabulary = {term: i for i, term in enumerate(kept)}
    idf = np.array(
        [math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in kept], dtype=np.float64
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, config=config)


def _tf_counts(model: TfidfModel, text: str) -> dict[int, float]:
    counts: dict[int, float] = {}
    for term in _terms(text, model.config.ngram_range):
        col = model.vocabulary.get(term)
        if col is not None:
            counts[col] = counts.get(col, 0.0) + 1.0
    if model.config.sublinear_tf:
        counts = {c: 1.0 + math.log(v) for c, v in counts.items()}
    return counts


def transform(model: TfidfModel, doc) -> SparseVector:
    """TF-IDF vector for one document; all-OOV input gives a zero vector."""
    counts = _tf_counts(model, _doc_text(doc))
    if not counts:
        return SparseVector(
            indices=np.empty(0, dtype=np.int32),
            values=np.empty(0, dtype=np.float64),
            dim=model.dim,
        )
    cols = np.array(sorted(counts), dtype=np.int32)
    vals = np.array([counts[c] for c in cols], dtype=np.float64) * model.idf[cols]
    if model.config.norm == "l2":
        vals = vals / np.sqrt(np.sum(vals**2))
    return SparseVector(indices=cols, values=vals, dim=model.dim)


def transform_matrix(model: TfidfModel, docs) -> sparse.csr_matrix:
    """Stack transform() of each document into a CSR matrix."""
    indptr = [0]
    indices: list[np.ndarray] = []
    values: list[np.ndarray] = []
    for doc in docs:
        vec = transform(model, doc)
        indices.append(vec.indices)
        values.append(vec.values)
        indptr.append(indptr[-1] + len(vec.indices))
    if indices:
        data = np.concatenate(values)
        cols = np.concatenate(indices)
    else:
        data = np.empty(0, dtype=np.float64)
        cols = np.empty(0, dtype=np.int32)
    return sparse.csr_matrix(
        (data, cols, np.asarray(indptr, dtype=np.int64)),
        shape=(len(indptr) - 1, model.dim),
    )


def stack_vectors(vectors: list[SparseVector]) -> sparse.csr_matrix:
    """CSR matrix from SparseVectors that share one dimension."""
    from mgtd.errors import MixedDimensions

    if not vectors:
        raise EmptyTrainingSet("no vectors to stack")
    dim = vectors[0].dim
    if any(v.dim != dim for v in vectors):
        raise MixedDimensions("vectors disagree on feature dimension")
    indptr = [0]
    for v in vectors:
        indptr.append(indptr[-1] + len(v.indices))
    data = (
        np.concatenate([v.values for v in vectors])
        if indptr[-1]
        else np.empty(0, dtype=np.float64)
    )
    cols = (
        np.concatenate([v.indices for v in vectors])
        if indptr[-1]
        else np.empty(0, dtype=np.int32)
    )
    return sparse.csr_matrix(
        (data, cols, np.asarray(indptr, dtype=np.int64)), shape=(len(vectors), dim)
    )
