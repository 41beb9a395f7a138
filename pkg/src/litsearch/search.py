"""Query-time pipeline: BM25 document ranking with semantic re-rank and topic
filtering, passage ranking with a proximity bonus, extractive answer
highlighting (at most three highlights per query), and FAQ matching.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, asdict

from .corpus import Article, Passage
from .medner import Gazetteer, extract_entities
from .text import INTERROGATIVES, STOPWORDS, sentence_spans, tokenize
from .vectors import TfidfModel, cosine


@dataclass
class SearchConfig:
    """All ranking/extraction tunables in one place, JSON-loadable."""
    window: int = 3
    stride: int = 2
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    title_weight: int = 2          # title tokens counted this many times
    bm25_blend: float = 0.8        # weight of normalized BM25 in the doc score
    semantic_blend: float = 0.2    # weight of the TF-IDF cosine
    qa_threshold: float = 0.25
    faq_threshold: float = 0.85
    cocanonical_weight: float = 0.5
    kg_expansion_weight: float = 0.25
    kg_expansion_cap: int = 3
    negation_window: int = 3
    passage_pool: int = 10
    max_answers: int = 3
    recommend_alpha: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def from_json(cls, path) -> "SearchConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Index

@dataclass
class Index:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    avg_doc_length: float = 0.0
    n_docs: int = 0
    passage_postings: dict[str, list[tuple[tuple[str, int], int]]] = field(default_factory=dict)
    passage_lengths: dict[tuple[str, int], int] = field(default_factory=dict)
    avg_passage_length: float = 0.0
    passages: dict[tuple[str, int], Passage] = field(default_factory=dict)
    doc_topics: dict[str, set[str]] = field(default_factory=dict)
    doc_entities: dict[str, set[str]] = field(default_factory=dict)


def build_index(articles: list[Article], passages: list[Passage],
                mentions: dict | None = None,
                doc_topic_labels: dict[str, set[str]] | None = None,
                config: SearchConfig | None = None,
                stopwords: frozenset[str] = STOPWORDS) -> Index:
    """Inverted index at document and passage granularity.

    Tokenization: lowercase, split on non-alphanumeric, stopwords and
    single-character tokens dropped. Title tokens are counted
    ``config.title_weight`` times.
    """
    config = config or SearchConfig()
    index = Index()
    doc_term_counts: dict[str, dict[str, int]] = {}
    for art in articles:
        counts: dict[str, int] = {}
        for _ in range(config.title_weight):
            for tok in tokenize(art.title, stopwords=stopwords):
                counts[tok] = counts.get(tok, 0) + 1
        for section in (art.abstract, art.body):
            for tok in tokenize(section, stopwords=stopwords):
                counts[tok] = counts.get(tok, 0) + 1
        doc_term_counts[art.doc_id] = counts
        index.doc_lengths[art.doc_id] = sum(counts.values())

    for doc_id in sorted(doc_term_counts):
        for term, tf in doc_term_counts[doc_id].items():
            index.postings.setdefault(term, []).append((doc_id, tf))
    index.n_docs = len(articles)
    if index.n_docs:
        index.avg_doc_length = sum(index.doc_lengths.values()) / index.n_docs

    for passage in sorted(passages, key=lambda p: p.ref()):
        counts = {}
        for tok in tokenize(passage.text, stopwords=stopwords):
            counts[tok] = counts.get(tok, 0) + 1
        index.passage_lengths[passage.ref()] = sum(counts.values())
        index.passages[passage.ref()] = passage
        for term, tf in counts.items():
            index.passage_postings.setdefault(term, []).append((passage.ref(), tf))
    if index.passage_lengths:
        index.avg_passage_length = (
            sum(index.passage_lengths.values()) / len(index.passage_lengths))

    if mentions:
        for doc_id, doc_mentions in mentions.items():
            index.doc_entities[doc_id] = {m.canonical_id for m in doc_mentions}
    if doc_topic_labels:
        index.doc_topics = {d: set(t) for d, t in doc_topic_labels.items()}
    return index


def bm25_idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_term_score(tf: int, df: int, doc_len: int, avg_len: float,
                    n_docs: int, k1: float = 1.2, b: float = 0.75) -> float:
    if tf == 0 or df == 0 or n_docs == 0:
        return 0.0
    norm = 1.0 - b + b * (doc_len / avg_len if avg_len > 0 else 0.0)
    return bm25_idf(n_docs, df) * tf * (k1 + 1.0) / (tf + k1 * norm)


# ---------------------------------------------------------------------------
# Query understanding

ANSWER_TYPES = ("temporal", "quantity", "entity_category", "definition", "none")

# Nouns that signal a time-flavored question even under "what/which".
TEMPORAL_CUES = frozenset({"when", "period", "duration", "date", "timeline"})

# Generic words that name an entity category in a question.
CATEGORY_CUES = {
    "medication": "Medication", "medications": "Medication",
    "drug": "Medication", "drugs": "Medication",
    "disease": "MedicalCondition", "diseases": "MedicalCondition",
    "condition": "MedicalCondition", "conditions": "MedicalCondition",
    "infection": "MedicalCondition", "infections": "MedicalCondition",
    "treatment": "TestTreatmentProcedure", "treatments": "TestTreatmentProcedure",
    "procedure": "TestTreatmentProcedure", "procedures": "TestTreatmentProcedure",
    "test": "TestTreatmentProcedure", "tests": "TestTreatmentProcedure",
    "therapy": "TestTreatmentProcedure", "therapies": "TestTreatmentProcedure",
    "organ": "Anatomy", "organs": "Anatomy",
}


@dataclass
class Query:
    raw: str
    mode: str = "keyword"                 # keyword | natural_language
    focus_terms: list[str] = field(default_factory=list)
    expansion_terms: list[tuple[str, float]] = field(default_factory=list)
    answer_type: str = "none"
    entity_category: str | None = None
    topic_filter: set[str] = field(default_factory=set)

    def term_weights(self) -> dict[str, float]:
        weights = {t: 1.0 for t in self.focus_terms}
        for term, w in self.expansion_terms:
            if term not in weights:
                weights[term] = max(w, weights.get(term, 0.0))
        return weights


def classify_query(raw: str, force_mode: str | None = None) -> Query:
    raw = raw.strip()
    if not raw:
        raise ValueError("empty query")
    words = raw.lower().split()
    first = re.sub(r"[^a-z0-9]", "", words[0]) if words else ""
    natural = first in INTERROGATIVES or raw.endswith("?")
    mode = force_mode or ("natural_language" if natural else "keyword")

    all_tokens = tokenize(raw, drop_stopwords=False)
    content = [t for t in all_tokens if t not in INTERROGATIVES]
    focus = [t for t in content if t not in STOPWORDS]
    if not focus:
        focus = content or all_tokens

    answer_type, category = "none", None
    token_set = set(all_tokens)
    bigrams = {f"{a} {b}" for a, b in zip(words, words[1:])}
    if natural:
        if first == "when" or token_set & TEMPORAL_CUES or "how long" in bigrams:
            answer_type = "temporal"
        elif "how many" in bigrams or "how much" in bigrams:
            answer_type = "quantity"
        elif first in ("which", "what"):
            cue = next((CATEGORY_CUES[t] for t in all_tokens if t in CATEGORY_CUES), None)
            if cue:
                answer_type, category = "entity_category", cue
            elif len(words) > 1 and words[1] in ("is", "are"):
                answer_type = "definition"
    return Query(raw=raw, mode=mode, focus_terms=focus,
                 answer_type=answer_type, entity_category=category)


def expand_query(query: Query, gazetteer: Gazetteer | None, graph=None,
                 config: SearchConfig | None = None) -> Query:
    """Entity-aware expansion: co-canonical surface forms at half weight, and
    the labels of entities co-mentioned with the query's entities (one hop
    through articles in the graph) at quarter weight, capped per entity.
    """
    config = config or SearchConfig()
    if gazetteer is None or not gazetteer.entries:
        return query
    expansions: dict[str, float] = {}
    focus = set(query.focus_terms)

    def add(surface: str, weight: float) -> None:
        for tok in tokenize(surface):
            if tok not in focus:
                expansions[tok] = max(weight, expansions.get(tok, 0.0))

    co_mention: dict[str, list[str]] = {}
    if graph is not None:
        by_article: dict[str, set[str]] = {}
        entity_articles: dict[str, list[str]] = {}
        for head, rel, tail in graph.triples:
            if rel == "mentions":
                by_article.setdefault(head, set()).add(tail)
                entity_articles.setdefault(tail, []).append(head)
        for entity, arts in entity_articles.items():
            neighbor_counts: dict[str, int] = {}
            for art in arts:
                for other in by_article[art]:
                    if other != entity:
                        neighbor_counts[other] = neighbor_counts.get(other, 0) + 1
            ranked = sorted(neighbor_counts,
                            key=lambda n: (-neighbor_counts[n], graph.nodes[n][1]))
            co_mention[entity] = ranked

    for mention in extract_entities(query.raw, gazetteer, config.negation_window):
        for surface in gazetteer.surfaces_for(mention.canonical_id):
            add(surface, config.cocanonical_weight)
        node = f"MedicalEntity:{mention.canonical_id}"
        for neighbor in co_mention.get(node, [])[:config.kg_expansion_cap]:
            add(graph.nodes[neighbor][1], config.kg_expansion_weight)

    query.expansion_terms = sorted(expansions.items())
    return query


# ---------------------------------------------------------------------------
# Ranking

def rank_documents(query: Query, index: Index, semantic: TfidfModel | None,
                   k: int, config: SearchConfig | None = None) -> list[tuple[str, float]]:
    """Weighted BM25 blended with a TF-IDF cosine; hard topic pre-filter."""
    if k < 1:
        raise ValueError("k must be >= 1")
    config = config or SearchConfig()

    def passes_filter(doc_id: str) -> bool:
        if not query.topic_filter:
            return True
        return bool(index.doc_topics.get(doc_id, set()) & query.topic_filter)

    bm25: dict[str, float] = {}
    for term, weight in query.term_weights().items():
        plist = index.postings.get(term)
        if not plist:
            continue
        df = len(plist)
        for doc_id, tf in plist:
            if not passes_filter(doc_id):
                continue
            score = bm25_term_score(tf, df, index.doc_lengths[doc_id],
                                    index.avg_doc_length, index.n_docs,
                                    config.bm25_k1, config.bm25_b)
            bm25[doc_id] = bm25.get(doc_id, 0.0) + weight * score
    if not bm25:
        return []

    max_bm25 = max(bm25.values())
    query_vec = semantic.transform(tokenize(query.raw)) if semantic is not None else None
    final = []
    for doc_id, score in bm25.items():
        blended = config.bm25_blend * (score / max_bm25 if max_bm25 > 0 else 0.0)
        if query_vec is not None and doc_id in semantic.doc_vectors_:
            blended += config.semantic_blend * cosine(query_vec, semantic.doc_vectors_[doc_id])
        final.append((doc_id, blended))
    final.sort(key=lambda pair: (-pair[1], pair[0]))
    return final[:k]


def _min_cover_window(positions: dict[str, list[int]]) -> int | None:
    """Length of the smallest token window containing one occurrence of every
    term in ``positions`` (each term has at least one position)."""
    events = sorted((pos, term) for term, plist in positions.items() for pos in plist)
    need = len(positions)
    counts: dict[str, int] = {}
    best = None
    left = 0
    have = 0
    for right, (pos_r, term_r) in enumerate(events):
        counts[term_r] = counts.get(term_r, 0) + 1
        if counts[term_r] == 1:
            have += 1
        while have == need:
            width = pos_r - events[left][0] + 1
            if best is None or width < best:
                best = width
            term_l = events[left][1]
            counts[term_l] -= 1
            if counts[term_l] == 0:
                have -= 1
            left += 1
    return best


def rank_passages(query: Query, index: Index, top_docs: list[tuple[str, float]],
                  k: int = 10, config: SearchConfig | None = None,
                  ) -> list[tuple[tuple[str, int], float]]:
    """BM25 over passages of the top documents plus a proximity bonus of
    1/(1 + smallest window covering all matched focus terms)."""
    config = config or SearchConfig()
    doc_ids = {d for d, _ in top_docs}
    if not doc_ids:
        return []
    n_passages = len(index.passage_lengths)

    scores: dict[tuple[str, int], float] = {}
    for term, weight in query.term_weights().items():
        plist = index.passage_postings.get(term)
        if not plist:
            continue
        df = len(plist)
        for ref, tf in plist:
            if ref[0] not in doc_ids:
                continue
            score = bm25_term_score(tf, df, index.passage_lengths[ref],
                                    index.avg_passage_length, n_passages,
                                    config.bm25_k1, config.bm25_b)
            scores[ref] = scores.get(ref, 0.0) + weight * score

    focus = set(query.focus_terms)
    ranked = []
    for ref, score in scores.items():
        tokens = tokenize(index.passages[ref].text)
        positions: dict[str, list[int]] = {}
        for pos, tok in enumerate(tokens):
            if tok in focus:
                positions.setdefault(tok, []).append(pos)
        if positions:
            width = _min_cover_window(positions)
            score += 1.0 / (1.0 + width)
        ranked.append((ref, score))
    ranked.sort(key=lambda pair: (-pair[1], pair[0][0], pair[0][1]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Answer extraction

_DURATION_RE = re.compile(
    r"\b\d+(?:\.\d+)?(?:\s*(?:-|–|to)\s*\d+(?:\.\d+)?)?\s*"
    r"(?:day|days|week|weeks|month|months|year|years|hour|hours)\b", re.IGNORECASE)
_DATE_RE = re.compile(
    r"\b(?:(?:19|20)\d{2}-\d{2}-\d{2}|(?:January|February|March|April|May|June|July|"
    r"August|September|October|November|December)\s+\d{1,2},?\s+(?:19|20)\d{2}|"
    r"(?:19|20)\d{2})\b")
_QUANTITY_RE = re.compile(r"\b\d+(?:\.\d+)?\s*(?:%|percent|[A-Za-z]+)\b")


@dataclass(frozen=True)
class AnswerSpan:
    doc_id: str
    passage_index: int
    char_start: int
    char_end: int
    text: str
    confidence: float

    def to_dict(self) -> dict:
        return asdict(self)


def extract_answer(query: Query, passage: Passage,
                   gazetteer: Gazetteer | None = None,
                   config: SearchConfig | None = None) -> AnswerSpan | None:
    """Heuristic span extraction typed by the query's answer type.

    Candidates are scored by the fraction of focus terms present in their
    containing sentence; the best candidate is returned when it clears the
    confidence threshold.
    """
    config = config or SearchConfig()
    text = passage.text
    sentences = sentence_spans(text)
    if not sentences:
        return None
    focus = set(query.focus_terms)

    def overlap(span_start: int, span_end: int) -> float:
        if not focus:
            return 0.0
        for s, e in sentences:
            if s <= span_start < e or (span_start <= s and span_end >= e):
                sent_tokens = set(tokenize(text[s:e], drop_stopwords=False))
                return len(focus & sent_tokens) / len(focus)
        return 0.0

    candidates: list[tuple[int, int]] = []
    if query.answer_type == "temporal":
        for pattern in (_DURATION_RE, _DATE_RE):
            candidates.extend(m.span() for m in pattern.finditer(text))
    elif query.answer_type == "quantity":
        candidates.extend(m.span() for m in _QUANTITY_RE.finditer(text))
    elif query.answer_type == "entity_category" and gazetteer is not None:
        for mention in extract_entities(text, gazetteer, config.negation_window):
            if mention.category == query.entity_category:
                candidates.append((mention.char_start, mention.char_end))
    else:
        candidates.extend(sentences)

    best: tuple[float, int, int] | None = None
    for start, end in candidates:
        score = overlap(start, end)
        if best is None or score > best[0] or (score == best[0] and start < best[1]):
            best = (score, start, end)
    if best is None or best[0] < config.qa_threshold:
        return None
    score, start, end = best
    return AnswerSpan(passage.doc_id, passage.passage_index, start, end,
                      text[start:end], score)


# ---------------------------------------------------------------------------
# FAQ matching

class FaqStore:
    """Curated question/answer pairs matched by TF-IDF cosine."""

    def __init__(self, entries: list[tuple[str, str]], match_threshold: float = 0.85):
        if not 0.0 < match_threshold <= 1.0:
            raise ValueError("match_threshold must be in (0, 1]")
        for question, _ in entries:
            if not question.strip():
                raise ValueError("FAQ questions must be non-empty")
        self.entries = list(entries)
        self.match_threshold = match_threshold
        self._model = TfidfModel().fit(
            {str(i): tokenize(q) for i, (q, _) in enumerate(entries)}) if entries else None

    @classmethod
    def from_json(cls, path, match_threshold: float = 0.85) -> "FaqStore":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls([(e["question"], e["answer"]) for e in raw], match_threshold)

    def match(self, raw_query: str) -> tuple[str, str, float] | None:
        if not self.entries:
            return None
        query_vec = self._model.transform(tokenize(raw_query))
        best_idx, best_sim = None, 0.0
        for i in range(len(self.entries)):
            sim = self._model.similarity(query_vec, str(i))
            if sim > best_sim:
                best_idx, best_sim = i, sim
        if best_idx is None or best_sim < self.match_threshold:
            return None
        question, answer = self.entries[best_idx]
        return (question, answer, best_sim)


def match_faq(raw_query: str, store: FaqStore) -> tuple[str, str, float] | None:
    return store.match(raw_query)


# ---------------------------------------------------------------------------
# Pipeline

@dataclass
class SearchResponse:
    docs: list[tuple[str, float]] = field(default_factory=list)
    passages: list[tuple[tuple[str, int], float]] = field(default_factory=list)
    answers: list[AnswerSpan] = field(default_factory=list)
    faq_answer: tuple[str, str, float] | None = None
    query: Query | None = None

    def to_dict(self) -> dict:
        return {
            "docs": [{"doc_id": d, "score": s} for d, s in self.docs],
            "passages": [{"doc_id": r[0], "passage_index": r[1], "score": s}
                         for r, s in self.passages],
            "answers": [a.to_dict() for a in self.answers],
            "faq_answer": None if self.faq_answer is None else {
                "question": self.faq_answer[0],
                "answer": self.faq_answer[1],
                "similarity": self.faq_answer[2],
            },
            "mode": self.query.mode if self.query else "keyword",
        }


class SearchEngine:
    """Everything needed to answer queries: index, semantic vectors,
    gazetteer, knowledge graph, topic labels, and the FAQ store."""

    def __init__(self, articles: list[Article], passages: list[Passage],
                 index: Index, semantic: TfidfModel | None = None,
                 gazetteer: Gazetteer | None = None, graph=None,
                 kg_embedding=None, faq: FaqStore | None = None,
                 topic_names: list[str] | None = None,
                 config: SearchConfig | None = None):
        self.articles = {a.doc_id: a for a in articles}
        self.passages = {p.ref(): p for p in passages}
        self.index = index
        self.semantic = semantic
        self.gazetteer = gazetteer
        self.graph = graph
        self.kg_embedding = kg_embedding
        self.faq = faq
        self.config = config or SearchConfig()
        if topic_names is not None:
            self.topic_names = list(topic_names)
        else:
            self.topic_names = sorted({t for ts in index.doc_topics.values() for t in ts})

    @classmethod
    def from_articles(cls, articles: list[Article], *, mentions=None,
                      doc_topic_labels=None, gazetteer=None, graph=None,
                      kg_embedding=None, faq=None, topic_names=None,
                      config: SearchConfig | None = None,
                      stopwords: frozenset[str] = STOPWORDS) -> "SearchEngine":
        from .corpus import segment_passages
        config = config or SearchConfig()
        passages = [p for a in articles
                    for p in segment_passages(a, config.window, config.stride)]
        index = build_index(articles, passages, mentions, doc_topic_labels,
                            config, stopwords)
        semantic = None
        if articles:
            semantic = TfidfModel().fit(
                {a.doc_id: tokenize(f"{a.title}\n{a.abstract}\n{a.body}",
                                    stopwords=stopwords)
                 for a in articles})
        return cls(articles, passages, index, semantic, gazetteer, graph,
                   kg_embedding, faq, topic_names, config)

    def search(self, raw_query: str, topic_filter: set[str] | None = None,
               mode: str | None = None, k: int = 10) -> SearchResponse:
        query = classify_query(raw_query, force_mode=mode)
        query.topic_filter = set(topic_filter or ())
        query = expand_query(query, self.gazetteer, self.graph, self.config)

        docs = rank_documents(query, self.index, self.semantic, k, self.config)
        passages = rank_passages(query, self.index, docs,
                                 self.config.passage_pool, self.config)
        answers: list[AnswerSpan] = []
        for ref, _ in passages:
            if len(answers) >= self.config.max_answers:
                break
            span = extract_answer(query, self.index.passages[ref],
                                  self.gazetteer, self.config)
            if span is not None:
                answers.append(span)
        faq_answer = self.faq.match(raw_query) if self.faq is not None else None
        return SearchResponse(docs=docs, passages=passages, answers=answers,
                              faq_answer=faq_answer, query=query)

    def search_payload(self, raw_query: str, topic_filter: set[str] | None = None,
                       mode: str | None = None, k: int = 10) -> dict:
        """Enriched, JSON-ready search response shared by the CLI and HTTP API."""
        response = self.search(raw_query, topic_filter, mode, k)
        payload = response.to_dict()
        for entry in payload["docs"]:
            art = self.articles[entry["doc_id"]]
            snippet_source = art.abstract or art.body or art.title
            entry["title"] = art.title
            entry["snippet"] = snippet_source[:240]
            entry["topics"] = sorted(self.index.doc_topics.get(entry["doc_id"], ()))
        for entry in payload["passages"]:
            passage = self.index.passages[(entry["doc_id"], entry["passage_index"])]
            entry["text"] = passage.text
            entry["section"] = passage.section
        return payload
