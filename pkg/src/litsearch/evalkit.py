"""TREC-style retrieval evaluation.

Run/qrels IO, multi-round qrels aggregation with id mapping, P@k / R@k /
NDCG@k, the keyword-vs-question robustness metric (exact-match and token F1
over result titles), and the blinded passage/answer judgement workflow.
"""

from __future__ import annotations

import csv
import json
import math
import random
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .text import normalize_title


@dataclass
class Qrels:
    # (topic_id, doc_id) -> relevance grade
    judgements: dict[tuple[str, str], int] = field(default_factory=dict)

    def topics(self) -> set[str]:
        return {t for t, _ in self.judgements}

    def grade(self, topic_id: str, doc_id: str) -> int:
        return self.judgements.get((topic_id, doc_id), 0)

    def relevant(self, topic_id: str) -> set[str]:
        return {d for (t, d), g in self.judgements.items() if t == topic_id and g >= 1}

    def graded(self, topic_id: str) -> dict[str, int]:
        return {d: g for (t, d), g in self.judgements.items() if t == topic_id}


def load_qrels(path) -> Qrels:
    """TREC qrels: whitespace-delimited `topic_id 0 doc_id grade` lines."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"qrels line {lineno}: expected 4 fields")
            topic_id, _, doc_id, grade = parts
            grade_value = int(grade)
            if grade_value < 0:
                raise ValueError(f"qrels line {lineno}: negative grade")
            qrels.judgements[(topic_id, doc_id)] = grade_value
    return qrels


def save_qrels(qrels: Qrels, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (topic_id, doc_id), grade in sorted(qrels.judgements.items()):
            fh.write(f"{topic_id} 0 {doc_id} {grade}\n")


@dataclass
class RunFile:
    # topic_id -> [(doc_id, score, rank)], rank dense from 1
    runs: dict[str, list[tuple[str, float, int]]] = field(default_factory=dict)
    tag: str = "run"

    def add(self, topic_id: str, ranked_docs: list[tuple[str, float]]) -> None:
        entries = [(doc_id, float(score), rank)
                   for rank, (doc_id, score) in enumerate(ranked_docs, start=1)]
        self.runs[topic_id] = entries
        self._validate_topic(topic_id)

    def _validate_topic(self, topic_id: str) -> None:
        entries = self.runs[topic_id]
        docs = [d for d, _, _ in entries]
        if len(set(docs)) != len(docs):
            raise ValueError(f"topic {topic_id}: duplicate doc in run")
        for i, (_, score, rank) in enumerate(entries):
            if rank != i + 1:
                raise ValueError(f"topic {topic_id}: ranks must be dense from 1")
            if i > 0 and score > entries[i - 1][1]:
                raise ValueError(f"topic {topic_id}: scores must be non-increasing")

    def top_docs(self, topic_id: str, k: int) -> list[str]:
        return [d for d, _, _ in self.runs.get(topic_id, [])[:k]]


def load_run(path) -> RunFile:
    """TREC run: `topic_id Q0 doc_id rank score tag` lines."""
    raw: dict[str, list[tuple[int, str, float]]] = {}
    tag = "run"
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"run line {lineno}: expected 6 fields")
            topic_id, _, doc_id, rank, score, tag = parts
            raw.setdefault(topic_id, []).append((int(rank), doc_id, float(score)))
    run = RunFile(tag=tag)
    for topic_id, entries in raw.items():
        entries.sort()
        run.runs[topic_id] = [(d, s, r) for r, d, s in entries]
        run._validate_topic(topic_id)
    return run


def save_run(run: RunFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic_id in sorted(run.runs):
            for doc_id, score, rank in run.runs[topic_id]:
                fh.write(f"{topic_id} Q0 {doc_id} {rank} {score:.6f} {run.tag}\n")


@dataclass(frozen=True)
class TopicSet:
    topic_id: str
    keyword_query: str
    natural_question: str
    narrative: str = ""


def load_topics(path) -> list[TopicSet]:
    """Topic file: JSON array of {topic_id, query, question, narrative}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    topics = [TopicSet(str(t["topic_id"]), t.get("query", ""),
                       t.get("question", ""), t.get("narrative", "")) for t in raw]
    if len({t.topic_id for t in topics}) != len(topics):
        raise ValueError("duplicate topic_id in topics file")
    return topics


# ---------------------------------------------------------------------------
# Qrels aggregation across corpus releases

def aggregate_qrels(rounds: list[Qrels], id_map: dict[str, str | None],
                    ) -> tuple[Qrels, int]:
    """Merge judgement rounds onto one corpus release.

    Doc ids are remapped through id_map; unmapped docs are dropped (count
    returned); conflicting grades for the same remapped pair resolve to the
    maximum grade.
    """
    merged = Qrels()
    dropped = 0
    for rnd in rounds:
        for (topic_id, doc_id), grade in rnd.judgements.items():
            mapped = id_map.get(doc_id, doc_id)
            if mapped is None:
                dropped += 1
                continue
            key = (topic_id, mapped)
            merged.judgements[key] = max(grade, merged.judgements.get(key, 0))
    return merged, dropped


# ---------------------------------------------------------------------------
# Ranking metrics

def _common_topics(run: RunFile, qrels: Qrels) -> list[str]:
    topics = []
    judged = qrels.topics()
    for topic_id in sorted(run.runs):
        if topic_id in judged:
            topics.append(topic_id)
        else:
            warnings.warn(f"topic {topic_id} has no judgements; excluded")
    return topics


def precision_recall_at_k(run: RunFile, qrels: Qrels,
                          precision_ks: tuple[int, ...] = (1, 5, 10, 20),
                          recall_ks: tuple[int, ...] = (10, 20),
                          ) -> dict[str, dict[str, float]]:
    """Per-topic P@k and R@k with binarized relevance (grade >= 1).

    P@k divides by k even when the run is shorter; topics with zero relevant
    documents contribute no R@k values.
    """
    per_topic: dict[str, dict[str, float]] = {}
    for topic_id in _common_topics(run, qrels):
        relevant = qrels.relevant(topic_id)
        metrics = {}
        for k in precision_ks:
            hits = sum(1 for d in run.top_docs(topic_id, k) if d in relevant)
            metrics[f"P@{k}"] = hits / k
        if relevant:
            for k in recall_ks:
                hits = sum(1 for d in run.top_docs(topic_id, k) if d in relevant)
                metrics[f"R@{k}"] = hits / len(relevant)
        per_topic[topic_id] = metrics
    return per_topic


def ndcg_at_k(run: RunFile, qrels: Qrels, k: int = 20) -> dict[str, float]:
    """Per-topic NDCG@k with graded gains and log2(i+1) discounts.

    The ideal ordering is taken over all judged documents for the topic;
    topics whose ideal DCG is zero are excluded.
    """
    per_topic: dict[str, float] = {}
    for topic_id in _common_topics(run, qrels):
        graded = qrels.graded(topic_id)
        ideal = sorted(graded.values(), reverse=True)[:k]
        idcg = sum(g / math.log2(i + 2) for i, g in enumerate(ideal))
        if idcg == 0:
            continue
        dcg = sum(graded.get(d, 0) / math.log2(i + 2)
                  for i, d in enumerate(run.top_docs(topic_id, k)))
        per_topic[topic_id] = dcg / idcg
    return per_topic


@dataclass
class MetricReport:
    per_topic: dict[str, dict[str, float]] = field(default_factory=dict)
    mean: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"per_topic": self.per_topic, "mean": self.mean}


def dr_report(run: RunFile, qrels: Qrels,
              precision_ks: tuple[int, ...] = (1, 5, 10, 20),
              recall_ks: tuple[int, ...] = (10, 20), ndcg_k: int = 20) -> MetricReport:
    """Document-ranking report: P@k, R@k, NDCG@k per topic plus means."""
    report = MetricReport()
    pr = precision_recall_at_k(run, qrels, precision_ks, recall_ks)
    ndcg = ndcg_at_k(run, qrels, ndcg_k)
    for topic_id, metrics in pr.items():
        report.per_topic[topic_id] = dict(metrics)
    for topic_id, value in ndcg.items():
        report.per_topic.setdefault(topic_id, {})[f"NDCG@{ndcg_k}"] = value
    keys = sorted({m for metrics in report.per_topic.values() for m in metrics})
    for key in keys:
        values = [m[key] for m in report.per_topic.values() if key in m]
        if values:
            report.mean[key] = sum(values) / len(values)
    return report


# ---------------------------------------------------------------------------
# Query-variation robustness (exact match / token F1 over titles)

def _token_f1(title_a: str, title_b: str) -> float:
    tokens_a = Counter(normalize_title(title_a).split())
    tokens_b = Counter(normalize_title(title_b).split())
    if not tokens_a or not tokens_b:
        return 1.0 if tokens_a == tokens_b else 0.0
    overlap = sum((tokens_a & tokens_b).values())
    if overlap == 0:
        return 0.0
    return 2.0 * overlap / (sum(tokens_a.values()) + sum(tokens_b.values()))


def robustness_em_f1(run_nq: RunFile, run_kq: RunFile, k: int,
                     titles: dict[str, str]) -> MetricReport:
    """Result agreement between a natural-question run and its keyword twin.

    The keyword run's top-k titles act as ground truth: each of the question
    run's top-k results scores an exact-match indicator (its normalized title
    appears in the keyword set) and a token-level F1 maximized over the
    keyword titles. Per-topic values divide by k even when fewer than k
    results exist; docs without a resolvable title are removed first.
    """
    report = MetricReport()
    shared = set(run_nq.runs) & set(run_kq.runs)
    for only in sorted((set(run_nq.runs) | set(run_kq.runs)) - shared):
        warnings.warn(f"topic {only} present in only one run; excluded")

    for topic_id in sorted(shared):
        nq_all = [d for d, _, _ in run_nq.runs[topic_id]]
        kq_all = [d for d, _, _ in run_kq.runs[topic_id]]
        nq_titles = [titles[d] for d in nq_all if d in titles][:k]
        kq_titles = [titles[d] for d in kq_all if d in titles][:k]
        kq_normed = {normalize_title(t) for t in kq_titles}
        em_sum = 0.0
        f1_sum = 0.0
        for title in nq_titles:
            if normalize_title(title) in kq_normed:
                em_sum += 1.0
            if kq_titles:
                f1_sum += max(_token_f1(title, kt) for kt in kq_titles)
        report.per_topic[topic_id] = {"EM": em_sum / k, "F1": f1_sum / k}

    for key in ("EM", "F1"):
        values = [m[key] for m in report.per_topic.values()]
        if values:
            report.mean[key] = sum(values) / len(values)
    return report


# ---------------------------------------------------------------------------
# Blinded passage/answer judgement workflow

SHEET_COLUMNS = ("row_id", "query", "title", "passage", "highlight",
                 "passage_relevant", "answers_question")


def prepare_blind_pool(systems: list[tuple[str, dict[str, list[dict]]]],
                       rng_seed: int = 0) -> tuple[list[dict], dict]:
    """Pool each system's top results into one shuffled annotation sheet.

    ``systems`` maps a system name to per-query result lists (<= 3 entries,
    each {"title", "passage", "highlight"}). Rows with the same
    (query, title, passage) collapse into one; the hidden mapping records,
    per row, every (system, rank) that produced it plus whether that system
    highlighted it, so scoring can be unblinded losslessly.
    """
    pooled: dict[tuple[str, str, str], dict] = {}
    sources: dict[tuple[str, str, str], list[dict]] = {}
    for name, per_query in systems:
        for query, results in per_query.items():
            if len(results) > 3:
                raise ValueError(f"system {name}: more than 3 results for {query!r}")
            for rank, result in enumerate(results, start=1):
                key = (query, result["title"], result["passage"])
                if key not in pooled:
                    pooled[key] = {
                        "query": query,
                        "title": result["title"],
                        "passage": result["passage"],
                        "highlight": result.get("highlight", ""),
                    }
                sources.setdefault(key, []).append({
                    "system": name,
                    "query": query,
                    "rank": rank,
                    "highlighted": bool(result.get("highlight")),
                })

    keys = sorted(pooled)
    rng = random.Random(rng_seed)
    rng.shuffle(keys)
    rows = []
    mapping_rows = {}
    for i, key in enumerate(keys):
        row_id = f"row{i:04d}"
        row = dict(pooled[key])
        row["row_id"] = row_id
        rows.append(row)
        mapping_rows[row_id] = sources[key]
    mapping = {"rng_seed": rng_seed, "rows": mapping_rows}
    return rows, mapping


def save_sheet(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SHEET_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col, "") for col in SHEET_COLUMNS})


def load_annotated_sheet(path) -> dict[str, tuple[bool, bool]]:
    """Annotated sheet CSV -> row_id -> (passage_relevant, answers_question)."""
    truthy = {"1", "true", "yes", "y"}
    annotations = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            annotations[row["row_id"]] = (
                row.get("passage_relevant", "").strip().lower() in truthy,
                row.get("answers_question", "").strip().lower() in truthy,
            )
    return annotations


def score_prqa(annotations: dict[str, tuple[bool, bool]], mapping: dict,
               ) -> dict[str, dict[str, dict[str, float]]]:
    """Unblind the pool and compute P@1..3 for passage relevance and answers.

    A rank a system never filled counts as a negative; a filled rank without
    a highlight counts as a negative for answer precision only. Unannotated
    rows are an error.
    """
    rows = mapping["rows"]
    missing = sorted(set(rows) - set(annotations))
    if missing:
        raise ValueError(f"unannotated rows: {', '.join(missing)}")

    queries: set[str] = set()
    # system -> query -> rank -> (passage_relevant, qa_positive)
    per_system: dict[str, dict[str, dict[int, tuple[bool, bool]]]] = {}
    for row_id, source_list in rows.items():
        pr, qa = annotations[row_id]
        for source in source_list:
            system = source["system"]
            rank = source["rank"]
            query = source["query"]
            queries.add(query)
            qa_positive = qa and source.get("highlighted", True)
            per_system.setdefault(system, {}).setdefault(query, {})[rank] = (pr, qa_positive)

    scores: dict[str, dict[str, dict[str, float]]] = {}
    for system in sorted(per_system):
        scores[system] = {"PR": {}, "QA": {}}
        for j in (1, 2, 3):
            pr_vals = []
            qa_vals = []
            for query in sorted(queries):
                ranks = per_system[system].get(query, {})
                pr_hits = sum(1 for r in range(1, j + 1) if ranks.get(r, (False, False))[0])
                qa_hits = sum(1 for r in range(1, j + 1) if ranks.get(r, (False, False))[1])
                pr_vals.append(pr_hits / j)
                qa_vals.append(qa_hits / j)
            scores[system]["PR"][f"P@{j}"] = sum(pr_vals) / len(pr_vals) if pr_vals else 0.0
            scores[system]["QA"][f"P@{j}"] = sum(qa_vals) / len(qa_vals) if qa_vals else 0.0
    return scores
