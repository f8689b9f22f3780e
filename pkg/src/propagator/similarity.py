"""Feature-wise stream similarity and its weighted aggregations.

Streams are compared on four features: data type (exact equality mask),
keyword sets (Jaccard), description text and endpoint tokens (tf-idf
cosine under one shared model). Two aggregate matrices drive everything
downstream:

* ``s_rd`` (k references × n discovered) blends keyword/description/endpoint
  similarity with weights alpha/beta/theta, then masks entries where the
  data types differ.
* ``s_dd`` (n × n discovered) is the same blend without the type mask;
  it is exactly symmetric with unit diagonal for non-degenerate streams.

The tf-idf convention is fixed: tf = raw count / document length,
idf = ln((1 + N) / (1 + df)) + 1, no further normalization before the
cosine. Zero-norm documents (empty description or endpoint) contribute
cosine 0 rather than an error.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .store import DataStreamRecord, DataType
from .text import tokenize_endpoint, tokenize_words

__all__ = [
    "FeatureVectors",
    "SimilarityBundle",
    "SimilarityWeights",
    "TfIdfModel",
    "build_tfidf",
    "compute_bundle",
    "compute_s_dd",
    "compute_s_rd",
    "cosine_matrix",
    "datatype_matrix",
    "jaccard_matrix",
    "tokenize_endpoint",
]


@dataclass(frozen=True)
class SimilarityWeights:
    alpha: float = 1.0 / 3.0
    beta: float = 1.0 / 3.0
    theta: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "theta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if abs(self.alpha + self.beta + self.theta - 1.0) > 1e-12:
            raise ValueError("alpha + beta + theta must equal 1")


@dataclass(frozen=True)
class FeatureVectors:
    """Per-stream feature columns; all five tuples share one length."""

    ids: tuple[str, ...]
    keyword_sets: tuple[frozenset[str], ...]
    description_docs: tuple[tuple[str, ...], ...]
    endpoint_docs: tuple[tuple[str, ...], ...]
    data_types: tuple[DataType, ...]

    def __post_init__(self) -> None:
        lengths = {
            len(self.ids),
            len(self.keyword_sets),
            len(self.description_docs),
            len(self.endpoint_docs),
            len(self.data_types),
        }
        if len(lengths) != 1:
            raise ValueError("feature columns must share one length")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_records(cls, records: Sequence[DataStreamRecord]) -> "FeatureVectors":
        return cls(
            ids=tuple(r.id for r in records),
            keyword_sets=tuple(frozenset(r.keywords) for r in records),
            description_docs=tuple(tuple(tokenize_words(r.description)) for r in records),
            endpoint_docs=tuple(tuple(tokenize_endpoint(r.endpoint)) for r in records),
            data_types=tuple(r.data_type for r in records),
        )


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: tuple[str, ...]
    idf: np.ndarray
    doc_matrix: np.ndarray
    _term_index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def transform(self, documents: Sequence[Sequence[str]]) -> np.ndarray:
        """Dense tf-idf rows for new documents under the fitted vocabulary."""
        indptr, idx, data = self.transform_csr(documents)
        out = np.zeros((len(documents), len(self.vocabulary)))
        rows = np.repeat(np.arange(len(documents)), np.diff(indptr))
        if len(idx):
            out[rows, idx] = data
        return out

    def transform_csr(
        self, documents: Sequence[Sequence[str]]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sparse row layout consumed by the kernels; unseen terms are dropped."""
        indptr = np.zeros(len(documents) + 1, dtype=np.int64)
        all_idx: list[int] = []
        all_data: list[float] = []
        for row, doc in enumerate(documents):
            if doc:
                counts = Counter(doc)
                length = len(doc)
                entries = sorted(
                    (self._term_index[t], c / length)
                    for t, c in counts.items()
                    if t in self._term_index
                )
                for col, tf in entries:
                    all_idx.append(col)
                    all_data.append(tf * self.idf[col])
            indptr[row + 1] = len(all_idx)
        return (
            indptr,
            np.asarray(all_idx, dtype=np.int32),
            np.asarray(all_data, dtype=np.float64),
        )


def build_tfidf(documents: Sequence[Sequence[str]]) -> TfIdfModel:
    """Fit vocabulary and idf on the full document collection."""
    n_docs = len(documents)
    df: Counter[str] = Counter()
    for doc in documents:
        df.update(set(doc))
    vocabulary = tuple(sorted(df))
    idf = np.array(
        [math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in vocabulary], dtype=np.float64
    )
    model = TfIdfModel(vocabulary=vocabulary, idf=idf, doc_matrix=np.zeros((0, 0)))
    object.__setattr__(model, "_term_index", {t: i for i, t in enumerate(vocabulary)})
    object.__setattr__(model, "doc_matrix", model.transform(documents))
    return model


def datatype_matrix(
    r_types: Sequence[DataType], d_types: Sequence[DataType]
) -> np.ndarray:
    """Binary mask: 1 where types are equal, 0 otherwise."""
    r = np.array([t.value for t in r_types])
    d = np.array([t.value for t in d_types])
    if not len(r) or not len(d):
        return np.zeros((len(r), len(d)))
    return (r[:, None] == d[None, :]).astype(np.float64)


def _token_csr(sets: Sequence[frozenset[str]], token_index: dict[str, int]):
    indptr = np.zeros(len(sets) + 1, dtype=np.int64)
    ids: list[int] = []
    for row, s in enumerate(sets):
        ids.extend(sorted(token_index[t] for t in s))
        indptr[row + 1] = len(ids)
    return indptr, np.asarray(ids, dtype=np.int32)


def jaccard_matrix(
    r_sets: Sequence[frozenset[str]], d_sets: Sequence[frozenset[str]]
) -> np.ndarray:
    """Pairwise |intersection| / |union|; a pair of empty sets scores 0."""
    token_index: dict[str, int] = {}
    for s in list(r_sets) + list(d_sets):
        for t in sorted(s):
            token_index.setdefault(t, len(token_index))
    r_indptr, r_ids = _token_csr(r_sets, token_index)
    d_indptr, d_ids = _token_csr(d_sets, token_index)
    return kernels.jaccard_pairwise(r_indptr, r_ids, d_indptr, d_ids)


def cosine_matrix(
    u_docs: Sequence[Sequence[str]], v_docs: Sequence[Sequence[str]], model: TfIdfModel
) -> np.ndarray:
    """Pairwise cosine under one shared model; zero-norm rows give 0."""
    u = model.transform_csr(u_docs)
    v = model.transform_csr(v_docs)
    return kernels.cosine_pairwise(*u, *v, len(model.vocabulary))


@dataclass(frozen=True)
class SimilarityBundle:
    s_rd: np.ndarray
    s_dd: np.ndarray
    weights: SimilarityWeights


def _blend(
    refs: FeatureVectors,
    disc: FeatureVectors,
    weights: SimilarityWeights,
    desc_model: TfIdfModel,
    api_model: TfIdfModel,
) -> np.ndarray:
    total = np.zeros((len(refs), len(disc)))
    # zero-weight components are skipped entirely so the degenerate cases
    # (e.g. alpha=1) reproduce the single component exactly
    if weights.alpha:
        total += weights.alpha * jaccard_matrix(refs.keyword_sets, disc.keyword_sets)
    if weights.beta:
        total += weights.beta * cosine_matrix(
            refs.description_docs, disc.description_docs, desc_model
        )
    if weights.theta:
        total += weights.theta * cosine_matrix(refs.endpoint_docs, disc.endpoint_docs, api_model)
    return total


def _fit_models(
    refs: FeatureVectors, disc: FeatureVectors
) -> tuple[TfIdfModel, TfIdfModel]:
    desc = build_tfidf(list(refs.description_docs) + list(disc.description_docs))
    api = build_tfidf(list(refs.endpoint_docs) + list(disc.endpoint_docs))
    return desc, api


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return np.triu(matrix) + np.triu(matrix, 1).T


def compute_s_rd(
    refs: FeatureVectors,
    disc: FeatureVectors,
    weights: SimilarityWeights | None = None,
    desc_model: TfIdfModel | None = None,
    api_model: TfIdfModel | None = None,
) -> np.ndarray:
    """Reference × discovered similarity, masked to equal data types."""
    weights = weights or SimilarityWeights()
    if desc_model is None or api_model is None:
        desc_model, api_model = _fit_models(refs, disc)
    blended = _blend(refs, disc, weights, desc_model, api_model)
    blended *= datatype_matrix(refs.data_types, disc.data_types)
    return np.clip(blended, 0.0, 1.0)


def compute_s_dd(
    disc: FeatureVectors,
    weights: SimilarityWeights | None = None,
    desc_model: TfIdfModel | None = None,
    api_model: TfIdfModel | None = None,
) -> np.ndarray:
    """Discovered × discovered similarity; no type mask, exactly symmetric."""
    weights = weights or SimilarityWeights()
    if desc_model is None:
        desc_model = build_tfidf(list(disc.description_docs))
    if api_model is None:
        api_model = build_tfidf(list(disc.endpoint_docs))
    blended = _blend(disc, disc, weights, desc_model, api_model)
    return np.clip(_symmetrize(blended), 0.0, 1.0)


def compute_bundle(
    refs: FeatureVectors, disc: FeatureVectors, weights: SimilarityWeights | None = None
) -> SimilarityBundle:
    """Both matrices under one tf-idf model fit on references plus discovered."""
    weights = weights or SimilarityWeights()
    desc_model, api_model = _fit_models(refs, disc)
    s_rd = compute_s_rd(refs, disc, weights, desc_model, api_model)
    s_dd = compute_s_dd(disc, weights, desc_model, api_model)
    return SimilarityBundle(s_rd=s_rd, s_dd=s_dd, weights=weights)
