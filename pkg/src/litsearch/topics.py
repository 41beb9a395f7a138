"""Topic modeling and multi-label topic classification.

Z-label LDA: collapsed Gibbs sampling where seeded terms may only be assigned
topics from their allowed set (hard constraint). Topics are then manually
curated (merge/delete/rename) down to a ten-topic scheme, document labels are
derived from the curated topic mixtures, and a one-vs-rest logistic
classifier is distilled from those labels so new documents can be tagged
without re-training the topic model.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .text import tokenize
from .vectors import TfidfModel

# The curated ten-topic scheme shipped as the default curation target.
TEN_TOPIC_NAMES = (
    "Vaccines/immunology",
    "Genomics",
    "Public health Policies",
    "Epidemiology",
    "Clinical Treatment",
    "Virology",
    "Influenza",
    "Healthcare Industry",
    "Pulmonary Infections",
    "Lab Trials (human)",
)


@njit(cache=True)
def _gibbs_kernel(token_word, token_doc, z, allowed, n_wt, n_dt, n_t,
                  alpha, beta, iterations, seed, recount_every):
    """Collapsed Gibbs sweeps with hard topic constraints.

    Mutates z and the count matrices in place. Returns (status, violations):
    status 1 means a periodic recount found the counts out of sync with z,
    violations counts tokens observed outside their allowed topic set after
    any sweep (always 0 when the masking is correct).
    """
    np.random.seed(seed)
    n_tokens = token_word.shape[0]
    V = n_wt.shape[0]
    K = n_wt.shape[1]
    vbeta = V * beta

    # initial assignment: uniform over each word's allowed topics
    for i in range(n_tokens):
        w = token_word[i]
        d = token_doc[i]
        count = 0
        for t in range(K):
            count += allowed[w, t]
        pick = int(np.random.random() * count)
        if pick >= count:
            pick = count - 1
        idx = -1
        for t in range(K):
            if allowed[w, t] == 1:
                idx += 1
                if idx == pick:
                    z[i] = t
                    break
        n_wt[w, z[i]] += 1
        n_dt[d, z[i]] += 1
        n_t[z[i]] += 1

    weights = np.empty(K)
    violations = 0
    for sweep in range(iterations):
        for i in range(n_tokens):
            w = token_word[i]
            d = token_doc[i]
            t_old = z[i]
            n_wt[w, t_old] -= 1
            n_dt[d, t_old] -= 1
            n_t[t_old] -= 1

            total = 0.0
            for t in range(K):
                if allowed[w, t] == 1:
                    wgt = (n_dt[d, t] + alpha) * (n_wt[w, t] + beta) / (n_t[t] + vbeta)
                else:
                    wgt = 0.0
                weights[t] = wgt
                total += wgt

            t_new = -1
            if total > 0.0:
                r = np.random.random() * total
                acc = 0.0
                for t in range(K):
                    acc += weights[t]
                    if r < acc:
                        t_new = t
                        break
            if t_new == -1 or weights[t_new] == 0.0:
                for t in range(K):
                    if allowed[w, t] == 1:
                        t_new = t
                        break
            z[i] = t_new
            n_wt[w, t_new] += 1
            n_dt[d, t_new] += 1
            n_t[t_new] += 1

        for i in range(n_tokens):
            if allowed[token_word[i], z[i]] == 0:
                violations += 1

        if recount_every > 0 and (sweep + 1) % recount_every == 0:
            c_wt = np.zeros_like(n_wt)
            c_dt = np.zeros_like(n_dt)
            c_t = np.zeros_like(n_t)
            for i in range(n_tokens):
                c_wt[token_word[i], z[i]] += 1
                c_dt[token_doc[i], z[i]] += 1
                c_t[z[i]] += 1
            for w in range(V):
                for t in range(K):
                    if c_wt[w, t] != n_wt[w, t]:
                        return 1, violations
            for d in range(n_dt.shape[0]):
                for t in range(K):
                    if c_dt[d, t] != n_dt[d, t]:
                        return 1, violations
            for t in range(K):
                if c_t[t] != n_t[t]:
                    return 1, violations
    return 0, violations


class ZLabelLda(BaseEstimator):
    """Z-label LDA trained by collapsed Gibbs sampling.

    seeds maps a term to the set of topic indices it may be assigned; all
    other terms sample over the full topic range. alpha defaults to
    50 / n_topics when not given.
    """

    def __init__(self, n_topics: int = 10, alpha: float | None = None,
                 beta: float = 0.01, iterations: int = 500,
                 seeds: dict[str, set[int]] | None = None,
                 random_state: int = 0, recount_every: int = 0):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.seeds = seeds
        self.random_state = random_state
        self.recount_every = recount_every

    def fit(self, docs: list[list[str]], doc_ids: list[str] | None = None) -> "ZLabelLda":
        K = self.n_topics
        if K < 1:
            raise ValueError("n_topics must be >= 1")
        if not docs or all(len(d) == 0 for d in docs):
            raise ValueError("empty corpus")
        if doc_ids is None:
            doc_ids = [str(i) for i in range(len(docs))]
        if len(doc_ids) != len(docs):
            raise ValueError("doc_ids length must match docs")

        vocab: dict[str, int] = {}
        for doc in docs:
            for term in doc:
                if term not in vocab:
                    vocab[term] = len(vocab)
        V = len(vocab)

        allowed = np.ones((V, K), dtype=np.uint8)
        for term, topic_set in (self.seeds or {}).items():
            topic_set = set(topic_set)
            if not topic_set:
                raise ValueError(f"seed term {term!r} has an empty allowed set")
            if any(t < 0 or t >= K for t in topic_set):
                raise ValueError(f"seed term {term!r} references a topic outside [0, {K})")
            if term not in vocab:
                warnings.warn(f"seed term {term!r} not in vocabulary; ignored")
                continue
            row = np.zeros(K, dtype=np.uint8)
            for t in topic_set:
                row[t] = 1
            allowed[vocab[term]] = row

        token_word = np.array([vocab[t] for doc in docs for t in doc], dtype=np.int32)
        token_doc = np.array([d for d, doc in enumerate(docs) for _ in doc], dtype=np.int32)
        z = np.zeros(token_word.size, dtype=np.int32)
        n_wt = np.zeros((V, K), dtype=np.int64)
        n_dt = np.zeros((len(docs), K), dtype=np.int64)
        n_t = np.zeros(K, dtype=np.int64)

        alpha = self.alpha if self.alpha is not None else 50.0 / K
        status, violations = _gibbs_kernel(
            token_word, token_doc, z, allowed, n_wt, n_dt, n_t,
            float(alpha), float(self.beta), int(self.iterations),
            int(self.random_state), int(self.recount_every),
        )
        if status != 0:
            raise RuntimeError("count bookkeeping diverged from assignments during sampling")

        self.vocab_ = vocab
        self.terms_ = sorted(vocab, key=vocab.get)
        self.doc_ids_ = list(doc_ids)
        self.alpha_ = float(alpha)
        self.z_ = z
        self.token_word_ = token_word
        self.token_doc_ = token_doc
        self.n_wt_ = n_wt
        self.n_dt_ = n_dt
        self.n_t_ = n_t
        self.z_violations_ = int(violations)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "n_wt_"):
            raise NotFittedError("ZLabelLda is not fitted")

    def phi(self) -> np.ndarray:
        """Topic-term distributions, shape (n_topics, vocab)."""
        self._check_fitted()
        V = len(self.vocab_)
        return ((self.n_wt_ + self.beta) / (self.n_t_ + V * self.beta)).T

    def theta(self) -> np.ndarray:
        """Document-topic mixtures, shape (docs, n_topics)."""
        self._check_fitted()
        lengths = self.n_dt_.sum(axis=1, keepdims=True)
        return (self.n_dt_ + self.alpha_) / (lengths + self.n_topics * self.alpha_)

    def top_terms(self, topic: int, n: int = 10) -> list[tuple[str, float]]:
        """The n most probable terms of one topic; ties break lexicographically."""
        self._check_fitted()
        if not 0 <= topic < self.n_topics:
            raise ValueError(f"topic {topic} out of range [0, {self.n_topics})")
        probs = self.phi()[topic]
        ranked = sorted(zip(self.terms_, probs), key=lambda p: (-p[1], p[0]))
        return [(term, float(p)) for term, p in ranked[:n]]

    def recount(self) -> None:
        """Recompute all count matrices from z and verify they match."""
        self._check_fitted()
        c_wt = np.zeros_like(self.n_wt_)
        c_dt = np.zeros_like(self.n_dt_)
        c_t = np.zeros_like(self.n_t_)
        for i in range(self.z_.size):
            c_wt[self.token_word_[i], self.z_[i]] += 1
            c_dt[self.token_doc_[i], self.z_[i]] += 1
            c_t[self.z_[i]] += 1
        if not (np.array_equal(c_wt, self.n_wt_) and np.array_equal(c_dt, self.n_dt_)
                and np.array_equal(c_t, self.n_t_)):
            raise AssertionError("count matrices inconsistent with assignments")


def save_checkpoint(model: ZLabelLda, path) -> None:
    model._check_fitted()
    payload = {
        "K": model.n_topics,
        "alpha": model.alpha_,
        "beta": model.beta,
        "vocab": model.terms_,
        "n_wt": model.n_wt_.tolist(),
        "n_dt": model.n_dt_.tolist(),
        "seed": model.random_state,
        "iterations": model.iterations,
        "doc_ids": model.doc_ids_,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> ZLabelLda:
    """Restore a trained model's counts; token-level state is not persisted,
    so the result supports inspection and labeling but not resumed sampling.
    """
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    model = ZLabelLda(n_topics=payload["K"], alpha=payload["alpha"],
                      beta=payload["beta"], iterations=payload["iterations"],
                      random_state=payload["seed"])
    model.terms_ = list(payload["vocab"])
    model.vocab_ = {t: i for i, t in enumerate(model.terms_)}
    model.doc_ids_ = list(payload["doc_ids"])
    model.alpha_ = float(payload["alpha"])
    model.n_wt_ = np.array(payload["n_wt"], dtype=np.int64)
    model.n_dt_ = np.array(payload["n_dt"], dtype=np.int64)
    model.n_t_ = model.n_wt_.sum(axis=0)
    model.z_ = np.zeros(0, dtype=np.int32)
    model.token_word_ = np.zeros(0, dtype=np.int32)
    model.token_doc_ = np.zeros(0, dtype=np.int32)
    model.z_violations_ = 0
    return model


@dataclass
class CuratedTopics:
    names: list[str]
    mapping: dict[int, int | None]  # original topic -> curated index or dropped

    def to_json(self) -> str:
        return json.dumps({
            "names": self.names,
            "mapping": {str(k): v for k, v in sorted(self.mapping.items())},
        }, sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "CuratedTopics":
        raw = json.loads(payload)
        return cls(list(raw["names"]), {int(k): v for k, v in raw["mapping"].items()})


def curate(model: ZLabelLda, ops: list[dict]) -> CuratedTopics:
    """Apply merge/delete/rename curation ops to a trained model.

    Each op is one of {"merge": [i, j, ...]}, {"delete": i}, or
    {"rename": [i, "name"]}. An index may take part in at most one merge or
    delete; conflicting ops raise.
    """
    K = model.n_topics
    merge_groups: list[list[int]] = []
    deletes: set[int] = set()
    renames: dict[int, str] = {}

    def check_index(i) -> int:
        if not isinstance(i, int) or not 0 <= i < K:
            raise ValueError(f"topic index {i!r} out of range [0, {K})")
        return i

    for op in ops:
        if len(op) != 1:
            raise ValueError(f"op must have exactly one key: {op!r}")
        if "merge" in op:
            group = [check_index(i) for i in op["merge"]]
            if len(group) < 2 or len(set(group)) != len(group):
                raise ValueError(f"merge needs >= 2 distinct indices: {op!r}")
            merge_groups.append(sorted(group))
        elif "delete" in op:
            deletes.add(check_index(op["delete"]))
        elif "rename" in op:
            idx, name = op["rename"]
            check_index(idx)
            if idx in renames and renames[idx] != name:
                raise ValueError(f"conflicting renames for topic {idx}")
            renames[idx] = str(name)
        else:
            raise ValueError(f"unknown op {op!r}")

    merged_members = [i for group in merge_groups for i in group]
    if len(set(merged_members)) != len(merged_members):
        raise ValueError("topic appears in more than one merge group")
    if deletes & set(merged_members):
        raise ValueError("topic both merged and deleted")
    if deletes & set(renames):
        raise ValueError("topic both deleted and renamed")

    group_of = {i: group for group in merge_groups for i in group}
    groups: list[list[int]] = []
    seen: set[int] = set()
    for i in range(K):
        if i in deletes or i in seen:
            continue
        group = group_of.get(i, [i])
        groups.append(group)
        seen.update(group)
    if not groups:
        raise ValueError("curation would retain zero topics")

    names: list[str] = []
    mapping: dict[int, int | None] = {i: None for i in deletes}
    for curated_idx, group in enumerate(groups):
        group_names = {renames[i] for i in group if i in renames}
        if len(group_names) > 1:
            raise ValueError(f"merge group {group} renamed inconsistently")
        names.append(group_names.pop() if group_names else f"topic_{group[0]}")
        for i in group:
            mapping[i] = curated_idx
    if len(set(names)) != len(names):
        raise ValueError("curated names must be unique")
    return CuratedTopics(names=names, mapping=mapping)


def curate_to_ten(model: ZLabelLda) -> CuratedTopics:
    """Default curation: fold a model with >= 10 topics onto the shipped
    ten-topic scheme (topic i feeds curated topic i mod 10).
    """
    K = model.n_topics
    if K < 10:
        raise ValueError("ten-topic curation needs a model with >= 10 topics")
    return CuratedTopics(
        names=list(TEN_TOPIC_NAMES),
        mapping={i: i % 10 for i in range(K)},
    )


def curated_word_counts(model: ZLabelLda, curated: CuratedTopics) -> np.ndarray:
    """Word counts per curated topic, shape (curated_topics, vocab)."""
    model._check_fitted()
    out = np.zeros((len(curated.names), len(model.vocab_)), dtype=np.int64)
    for orig, cur in curated.mapping.items():
        if cur is not None:
            out[cur] += model.n_wt_[:, orig]
    return out


def derive_doc_labels(model: ZLabelLda, curated: CuratedTopics,
                      assign_threshold: float = 0.2) -> dict[str, set[str]]:
    """Gold labels from curated topic mixtures.

    A curated topic is assigned when its (renormalized) mixture weight
    reaches the threshold; documents that clear no threshold fall back to
    their argmax topic, so every document gets at least one label.
    """
    if not 0.0 < assign_threshold < 1.0:
        raise ValueError("assign_threshold must be in (0, 1)")
    theta = model.theta()
    n_curated = len(curated.names)
    labels: dict[str, set[str]] = {}
    for row, doc_id in enumerate(model.doc_ids_):
        cur = np.zeros(n_curated)
        for orig, curated_idx in curated.mapping.items():
            if curated_idx is not None:
                cur[curated_idx] += theta[row, orig]
        total = cur.sum()
        if total > 0:
            cur /= total
        else:
            cur[:] = 1.0 / n_curated
        chosen = {curated.names[t] for t in range(n_curated) if cur[t] >= assign_threshold}
        if not chosen:
            chosen = {curated.names[int(np.argmax(cur))]}
        labels[doc_id] = chosen
    return labels


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


class TopicClassifier(BaseEstimator):
    """One-vs-rest logistic regression over TF-IDF features.

    Trained by full-batch gradient descent to a convergence tolerance;
    with the zero initialization the fit is exactly deterministic.
    """

    def __init__(self, threshold: float = 0.5, learning_rate: float = 0.5,
                 max_iter: int = 2000, tol: float = 1e-6, random_state: int = 0):
        self.threshold = threshold
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _features(self, docs: dict[str, str]) -> tuple[list[str], np.ndarray]:
        doc_ids = sorted(docs)
        X = np.zeros((len(doc_ids), len(self.vectorizer_.vocab_)))
        for row, doc_id in enumerate(doc_ids):
            for idx, w in self.vectorizer_.transform(tokenize(docs[doc_id])).items():
                X[row, idx] = w
        return doc_ids, X

    def fit(self, docs: dict[str, str], gold_labels: dict[str, set[str]],
            label_set: list[str] | None = None) -> "TopicClassifier":
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if set(docs) != set(gold_labels):
            raise ValueError("docs and gold_labels must share the same keys")
        if label_set is None:
            label_set = sorted({lab for labs in gold_labels.values() for lab in labs})

        self.vectorizer_ = TfidfModel().fit(
            {doc_id: tokenize(text) for doc_id, text in docs.items()})
        doc_ids, X = self._features(docs)

        self.label_set_ = []
        self.weights_ = {}
        self.bias_ = {}
        n = len(doc_ids)
        for label in label_set:
            y = np.array([1.0 if label in gold_labels[d] else 0.0 for d in doc_ids])
            if y.sum() == 0:
                warnings.warn(f"label {label!r} has no positive examples; excluded")
                continue
            w = np.zeros(X.shape[1])
            b = 0.0
            for _ in range(self.max_iter):
                p = _sigmoid(X @ w + b)
                err = p - y
                grad_w = X.T @ err / n
                grad_b = float(err.mean())
                w -= self.learning_rate * grad_w
                b -= self.learning_rate * grad_b
                if max(np.abs(grad_w).max(initial=0.0), abs(grad_b)) < self.tol:
                    break
            self.label_set_.append(label)
            self.weights_[label] = w
            self.bias_[label] = b
        return self

    def scores(self, docs: dict[str, str]) -> dict[str, dict[str, float]]:
        """Per-label probabilities for each document."""
        if not hasattr(self, "label_set_"):
            raise NotFittedError("TopicClassifier is not fitted")
        doc_ids, X = self._features(docs)
        out: dict[str, dict[str, float]] = {d: {} for d in doc_ids}
        for label in self.label_set_:
            probs = _sigmoid(X @ self.weights_[label] + self.bias_[label])
            for row, doc_id in enumerate(doc_ids):
                out[doc_id][label] = float(probs[row])
        return out

    def predict(self, docs: dict[str, str]) -> dict[str, set[str]]:
        """Label sets: every label whose probability reaches the threshold."""
        scored = self.scores(docs)
        return {d: {lab for lab, p in labs.items() if p >= self.threshold}
                for d, labs in scored.items()}


def evaluate_f1(gold: dict[str, set[str]], pred: dict[str, set[str]]) -> dict[str, float]:
    """Set-overlap F1 averaged over documents.

    Per-document F1 is 2|g∩p| / (|g|+|p|), defined as 1.0 when both sets are
    empty and 0.0 when exactly one is. Also reports the mean predicted label
    count and the fraction of documents left unlabeled.
    """
    if set(gold) != set(pred):
        raise ValueError("gold and pred must cover the same documents")
    if not gold:
        raise ValueError("no documents to evaluate")
    f1_total = 0.0
    label_total = 0
    unlabeled = 0
    for doc_id in gold:
        g, p = gold[doc_id], pred[doc_id]
        if not g and not p:
            f1_total += 1.0
        elif g and p:
            f1_total += 2.0 * len(g & p) / (len(g) + len(p))
        label_total += len(p)
        if not p:
            unlabeled += 1
    n = len(gold)
    return {
        "avg_f1": f1_total / n,
        "avg_labels_per_doc": label_total / n,
        "pct_unlabeled": unlabeled / n,
    }
