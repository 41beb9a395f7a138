"""TF-IDF document vectors with cosine similarity.

Used as the corpus-trained semantic representation: document re-ranking,
recommendations, FAQ matching, and classifier features all share this model.
Vectors are sparse ``{term_index: weight}`` dicts with unit L2 norm, or dense
numpy rows when a truncated-SVD reduction is enabled.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError


def cosine(a, b) -> float:
    """Cosine similarity between two vectors (sparse dicts or numpy arrays)."""
    if isinstance(a, dict) and isinstance(b, dict):
        if len(b) < len(a):
            a, b = b, a
        return float(sum(w * b.get(i, 0.0) for i, w in a.items()))
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


class TfidfModel(BaseEstimator):
    """Sparse TF-IDF vectorizer over pre-tokenized documents.

    idf = ln((1+N)/(1+df)) + 1 (smoothed, always positive), rows L2-normalized.
    With ``reduce_rank`` set, document vectors are projected onto the top-r
    left singular directions instead (dense rows, renormalized).
    """

    def __init__(self, reduce_rank: int | None = None):
        self.reduce_rank = reduce_rank

    def fit(self, docs: dict[str, list[str]]) -> "TfidfModel":
        """Fit vocabulary, idf, and per-document vectors.

        docs maps a document id to its token list. Empty documents get the
        zero vector.
        """
        self.vocab_: dict[str, int] = {}
        df: dict[str, int] = {}
        for tokens in docs.values():
            for term in set(tokens):
                df[term] = df.get(term, 0) + 1
        for term in sorted(df):
            self.vocab_[term] = len(self.vocab_)
        n_docs = len(docs)
        self.idf_ = np.zeros(len(self.vocab_))
        for term, idx in self.vocab_.items():
            self.idf_[idx] = math.log((1.0 + n_docs) / (1.0 + df[term])) + 1.0

        sparse = {doc_id: self._vectorize(tokens) for doc_id, tokens in docs.items()}
        if self.reduce_rank:
            self._fit_reduction(sparse)
        else:
            self.projection_ = None
            self.doc_vectors_ = sparse
        return self

    def _vectorize(self, tokens: list[str]) -> dict[int, float]:
        counts: dict[int, int] = {}
        for term in tokens:
            idx = self.vocab_.get(term)
            if idx is not None:
                counts[idx] = counts.get(idx, 0) + 1
        vec = {idx: tf * self.idf_[idx] for idx, tf in counts.items()}
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm > 0:
            vec = {idx: w / norm for idx, w in vec.items()}
        return vec

    def _fit_reduction(self, sparse: dict[str, dict[int, float]]) -> None:
        doc_ids = sorted(sparse)
        matrix = np.zeros((len(doc_ids), len(self.vocab_)))
        for row, doc_id in enumerate(doc_ids):
            for idx, w in sparse[doc_id].items():
                matrix[row, idx] = w
        rank = min(self.reduce_rank, min(matrix.shape))
        _, _, vt = np.linalg.svd(matrix, full_matrices=False)
        self.projection_ = vt[:rank].T  # vocab x r
        self.doc_vectors_ = {}
        for row, doc_id in enumerate(doc_ids):
            self.doc_vectors_[doc_id] = self._project(matrix[row])

    def _project(self, full_vec: np.ndarray) -> np.ndarray:
        reduced = full_vec @ self.projection_
        norm = np.linalg.norm(reduced)
        return reduced / norm if norm > 0 else reduced

    def transform(self, tokens: list[str]):
        """Vectorize a new token list with the fitted vocabulary and idf."""
        if not hasattr(self, "vocab_"):
            raise NotFittedError("TfidfModel is not fitted")
        vec = self._vectorize(tokens)
        if self.projection_ is not None:
            full = np.zeros(len(self.vocab_))
            for idx, w in vec.items():
                full[idx] = w
            return self._project(full)
        return vec

    def doc_vector(self, doc_id: str):
        return self.doc_vectors_[doc_id]

    def similarity(self, query_vec, doc_id: str) -> float:
        return cosine(query_vec, self.doc_vectors_[doc_id])
