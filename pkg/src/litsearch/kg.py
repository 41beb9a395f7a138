"""Knowledge graph over articles, authors, institutions, topics, and medical
entities, plus translational embeddings and graph-powered features:
recommendations, citation navigation, and publication-count ranking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .text import normalize_name
from .vectors import TfidfModel, cosine

NODE_KINDS = ("Article", "Author", "Institution", "Topic", "MedicalEntity")

# relation -> (head kind, tail kind)
RELATION_SCHEMA = {
    "authored_by": ("Article", "Author"),
    "affiliated_with": ("Article", "Institution"),
    "cites": ("Article", "Article"),
    "has_topic": ("Article", "Topic"),
    "mentions": ("Article", "MedicalEntity"),
}


def article_node(doc_id: str) -> str:
    return f"Article:{doc_id}"


@dataclass
class KnowledgeGraph:
    nodes: dict[str, tuple[str, str]] = field(default_factory=dict)  # id -> (kind, label)
    triples: list[tuple[str, str, str]] = field(default_factory=list)
    dangling_citations: int = 0

    def _ensure_node(self, node_id: str, kind: str, label: str) -> str:
        if node_id not in self.nodes:
            self.nodes[node_id] = (kind, label)
        return node_id

    def add_triple(self, head: str, relation: str, tail: str) -> None:
        if relation not in RELATION_SCHEMA:
            raise ValueError(f"unknown relation {relation!r}")
        for endpoint in (head, tail):
            if endpoint not in self.nodes:
                raise ValueError(f"triple endpoint {endpoint!r} missing from nodes")
        want_head, want_tail = RELATION_SCHEMA[relation]
        if self.nodes[head][0] != want_head or self.nodes[tail][0] != want_tail:
            raise ValueError(
                f"relation {relation} requires {want_head}->{want_tail}, got "
                f"{self.nodes[head][0]}->{self.nodes[tail][0]}"
            )
        self.triples.append((head, relation, tail))

    def validate(self) -> None:
        """Referential integrity, relation typing, and triple uniqueness."""
        for head, relation, tail in self.triples:
            if head not in self.nodes or tail not in self.nodes:
                raise ValueError(f"dangling endpoint in ({head}, {relation}, {tail})")
            want_head, want_tail = RELATION_SCHEMA[relation]
            if self.nodes[head][0] != want_head or self.nodes[tail][0] != want_tail:
                raise ValueError(f"type violation in ({head}, {relation}, {tail})")
        if len(set(self.triples)) != len(self.triples):
            raise ValueError("duplicate triples present")

    def citation_neighbors(self, doc_id: str) -> dict[str, list[str]]:
        """Outgoing and incoming `cites` edges of one article, sorted by id."""
        node = article_node(doc_id)
        if node not in self.nodes:
            raise KeyError(f"unknown doc_id {doc_id!r}")
        cites = sorted(t.split(":", 1)[1] for h, r, t in self.triples
                       if r == "cites" and h == node)
        cited_by = sorted(h.split(":", 1)[1] for h, r, t in self.triples
                          if r == "cites" and t == node)
        return {"cites": cites, "cited_by": cited_by}

    def publication_counts(self, kind: str) -> dict[str, int]:
        """Number of distinct articles linked to each Author or Institution node."""
        relation = {"Author": "authored_by", "Institution": "affiliated_with"}[kind]
        linked: dict[str, set[str]] = {}
        for head, rel, tail in self.triples:
            if rel == relation:
                linked.setdefault(tail, set()).add(head)
        return {node: len(arts) for node, arts in linked.items()}

    def doc_links(self, relation: str) -> dict[str, list[str]]:
        """doc_id -> tail node ids for one relation, in insertion order."""
        out: dict[str, list[str]] = {}
        for head, rel, tail in self.triples:
            if rel == relation:
                out.setdefault(head.split(":", 1)[1], []).append(tail)
        return out


def build_graph(articles, mentions=None, topic_labels=None) -> KnowledgeGraph:
    """Construct the property graph from articles plus optional entity
    mentions (doc_id -> list of EntityMention) and topic labels
    (doc_id -> set of names). Citations pointing outside the corpus are
    skipped and counted, never materialized as dangling edges.
    """
    mentions = mentions or {}
    topic_labels = topic_labels or {}
    graph = KnowledgeGraph()
    corpus_ids = {a.doc_id for a in articles}

    for art in articles:
        graph._ensure_node(article_node(art.doc_id), "Article", art.title)
    for art in articles:
        head = article_node(art.doc_id)
        seen: set[tuple[str, str]] = set()

        def link(relation: str, tail_id: str, kind: str, label: str) -> None:
            if (relation, tail_id) in seen:
                return
            seen.add((relation, tail_id))
            graph._ensure_node(tail_id, kind, label)
            graph.add_triple(head, relation, tail_id)

        for author in art.authors:
            link("authored_by", f"Author:{normalize_name(author)}", "Author", author)
        for inst in art.institutions:
            link("affiliated_with", f"Institution:{normalize_name(inst)}",
                 "Institution", inst)
        for cited in art.cited_doc_ids:
            if cited not in corpus_ids:
                graph.dangling_citations += 1
                continue
            link("cites", article_node(cited), "Article", "")
        for topic in sorted(topic_labels.get(art.doc_id, ())):
            link("has_topic", f"Topic:{topic}", "Topic", topic)
        for mention in mentions.get(art.doc_id, ()):
            link("mentions", f"MedicalEntity:{mention.canonical_id}",
                 "MedicalEntity", mention.text.lower())
    return graph


@dataclass
class KgEmbedding:
    dim: int
    entity_vectors: dict[str, np.ndarray]
    relation_vectors: dict[str, np.ndarray]

    def score(self, head: str, relation: str, tail: str) -> float:
        """Translational plausibility: -||v_h + v_r - v_t||_2 (higher is better)."""
        diff = (self.entity_vectors[head] + self.relation_vectors[relation]
                - self.entity_vectors[tail])
        return -float(np.linalg.norm(diff))

    def to_json(self) -> str:
        return json.dumps({
            "dim": self.dim,
            "entities": {k: [float(x) for x in v]
                         for k, v in sorted(self.entity_vectors.items())},
            "relations": {k: [float(x) for x in v]
                          for k, v in sorted(self.relation_vectors.items())},
        }, sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "KgEmbedding":
        raw = json.loads(payload)
        return cls(
            dim=raw["dim"],
            entity_vectors={k: np.asarray(v) for k, v in raw["entities"].items()},
            relation_vectors={k: np.asarray(v) for k, v in raw["relations"].items()},
        )


class TransEModel(BaseEstimator):
    """Margin-ranking translational embeddings over graph triples.

    Positive triples are scored against corrupted ones (head or tail replaced
    uniformly at random); violations update the embeddings by SGD on the L2
    distance, and entity vectors are projected back into the unit ball after
    every epoch. Fully deterministic for a fixed random_state.
    """

    def __init__(self, dim: int = 32, epochs: int = 200, margin: float = 1.0,
                 learning_rate: float = 0.05, lr_decay: float = 0.05,
                 negatives_per_positive: int = 1, random_state: int = 0):
        self.dim = dim
        self.epochs = epochs
        self.margin = margin
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.negatives_per_positive = negatives_per_positive
        self.random_state = random_state

    def fit(self, graph: KnowledgeGraph) -> "TransEModel":
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not graph.triples:
            raise ValueError("nothing to train: graph has zero triples")
        rng = np.random.default_rng(self.random_state)

        entities = sorted(graph.nodes)
        relations = sorted({r for _, r, _ in graph.triples})
        self.entity_index_ = {e: i for i, e in enumerate(entities)}
        self.relation_index_ = {r: i for i, r in enumerate(relations)}
        n_ent = len(entities)

        bound = 6.0 / np.sqrt(self.dim)
        ent = rng.uniform(-bound, bound, size=(n_ent, self.dim))
        rel = rng.uniform(-bound, bound, size=(len(relations), self.dim))
        rel /= np.maximum(np.linalg.norm(rel, axis=1, keepdims=True), 1e-12)

        heads = np.array([self.entity_index_[h] for h, _, _ in graph.triples])
        rels = np.array([self.relation_index_[r] for _, r, _ in graph.triples])
        tails = np.array([self.entity_index_[t] for _, _, t in graph.triples])
        npp = self.negatives_per_positive

        triple_set = {(int(h), int(r), int(t)) for h, r, t in zip(heads, rels, tails)}

        def corrupt(h, r, t):
            """Replace head or tail uniformly; corruptions that reproduce an
            existing triple are rejected and resampled (filtered negatives)."""
            corrupt_head = rng.integers(0, 2, size=h.size).astype(bool)
            replacement = rng.integers(0, n_ent, size=h.size)
            h_neg = np.where(corrupt_head, replacement, h)
            t_neg = np.where(corrupt_head, t, replacement)
            for _ in range(100):
                bad = np.array([(int(hh), int(rr), int(tt)) in triple_set
                                for hh, rr, tt in zip(h_neg, r, t_neg)])
                if not bad.any():
                    break
                corrupt_head = rng.integers(0, 2, size=int(bad.sum())).astype(bool)
                replacement = rng.integers(0, n_ent, size=int(bad.sum()))
                h_neg[bad] = np.where(corrupt_head, replacement, h[bad])
                t_neg[bad] = np.where(corrupt_head, t[bad], replacement)
            return h_neg, t_neg

        # fixed probe corruptions: the recorded per-epoch loss is measured on
        # these, so the trajectory is comparable across epochs
        probe_h, probe_t = corrupt(heads, rels, tails)

        def probe_loss() -> float:
            d_pos = np.linalg.norm(ent[heads] + rel[rels] - ent[tails], axis=1)
            d_neg = np.linalg.norm(ent[probe_h] + rel[rels] - ent[probe_t], axis=1)
            return float(np.maximum(self.margin + d_pos - d_neg, 0.0).mean())

        self.epoch_losses_ = []
        for epoch in range(self.epochs):
            lr = self.learning_rate / (1.0 + self.lr_decay * epoch)
            h = np.repeat(heads, npp)
            r = np.repeat(rels, npp)
            t = np.repeat(tails, npp)
            h_neg, t_neg = corrupt(h, r, t)

            diff_pos = ent[h] + rel[r] - ent[t]
            diff_neg = ent[h_neg] + rel[r] - ent[t_neg]
            d_pos = np.linalg.norm(diff_pos, axis=1)
            d_neg = np.linalg.norm(diff_neg, axis=1)
            hinge = self.margin + d_pos - d_neg
            violated = hinge > 0
            if not violated.any():
                self.epoch_losses_.append(probe_loss())
                continue

            # update magnitude scales with the violation slack, so steps fade
            # out as constraints become satisfied
            slack = hinge[violated, None]
            u_pos = slack * diff_pos[violated] / np.maximum(d_pos[violated, None], 1e-12)
            u_neg = slack * diff_neg[violated] / np.maximum(d_neg[violated, None], 1e-12)
            hv, rv, tv = h[violated], r[violated], t[violated]
            hnv, tnv = h_neg[violated], t_neg[violated]
            # descend on d_pos, ascend on d_neg
            np.add.at(ent, hv, -lr * u_pos)
            np.add.at(ent, tv, lr * u_pos)
            np.add.at(rel, rv, -lr * u_pos)
            np.add.at(ent, hnv, lr * u_neg)
            np.add.at(ent, tnv, -lr * u_neg)
            np.add.at(rel, rv, lr * u_neg)

            norms = np.linalg.norm(ent, axis=1)
            over = norms > 1.0
            ent[over] /= norms[over, None]
            self.epoch_losses_.append(probe_loss())

        self.entity_vecs_ = ent
        self.relation_vecs_ = rel
        return self

    def embedding(self) -> KgEmbedding:
        if not hasattr(self, "entity_vecs_"):
            raise NotFittedError("TransEModel is not fitted")
        return KgEmbedding(
            dim=self.dim,
            entity_vectors={e: self.entity_vecs_[i].copy()
                            for e, i in self.entity_index_.items()},
            relation_vectors={r: self.relation_vecs_[i].copy()
                              for r, i in self.relation_index_.items()},
        )


def recommend(doc_id: str, semantic: TfidfModel, embedding: KgEmbedding | None,
              k: int = 10, alpha: float = 0.5) -> list[tuple[str, float]]:
    """Top-k most similar documents under the blended kernel
    alpha * cosine(semantic) + (1 - alpha) * cosine(kg). Ties break by
    doc_id ascending; the query document itself is excluded.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if doc_id not in semantic.doc_vectors_:
        raise KeyError(f"unknown doc_id {doc_id!r}")

    def kg_vec(d: str):
        if embedding is None:
            return None
        return embedding.entity_vectors.get(article_node(d))

    base_sem = semantic.doc_vectors_[doc_id]
    base_kg = kg_vec(doc_id)
    scored = []
    for other in semantic.doc_vectors_:
        if other == doc_id:
            continue
        sim = alpha * cosine(base_sem, semantic.doc_vectors_[other])
        if alpha < 1.0:
            other_kg = kg_vec(other)
            if base_kg is not None and other_kg is not None:
                sim += (1.0 - alpha) * cosine(base_kg, other_kg)
        scored.append((other, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:min(k, len(scored))]


def rank_by_publication_count(results: list[str], graph: KnowledgeGraph,
                              by: str = "author") -> list[str]:
    """Stable re-sort of a result list by descending publication count.

    A document's count is the best count among its authors (or institutions);
    ties keep the input order.
    """
    kind = {"author": "Author", "institution": "Institution"}[by]
    relation = {"author": "authored_by", "institution": "affiliated_with"}[by]
    counts = graph.publication_counts(kind)
    links = graph.doc_links(relation)

    def doc_count(doc_id: str) -> int:
        return max((counts.get(node, 0) for node in links.get(doc_id, ())), default=0)

    return sorted(results, key=lambda d: -doc_count(d))


def export_triples(graph: KnowledgeGraph, path) -> None:
    """Triples TSV: head_kind:head_id, relation, tail_kind:tail_id per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for head, relation, tail in graph.triples:
            fh.write(f"{head}\t{relation}\t{tail}\n")


def load_triples(path) -> KnowledgeGraph:
    """Rebuild a graph from a triples TSV. Node labels are not carried by the
    format; they default to the id part of each node.
    """
    graph = KnowledgeGraph()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"triples row {lineno}: expected 3 fields")
            head, relation, tail = parts
            for node in (head, tail):
                kind, _, ident = node.partition(":")
                if kind not in NODE_KINDS:
                    raise ValueError(f"triples row {lineno}: unknown kind {kind!r}")
                graph._ensure_node(node, kind, ident)
            graph.add_triple(head, relation, tail)
    return graph
