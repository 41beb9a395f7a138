"""litsearch: semantic search engine and evaluation harness for a corpus of
scientific articles — BM25 document/passage ranking with entity-aware query
expansion, extractive answer highlighting, FAQ matching, seeded topic
modeling, knowledge-graph recommendations, and TREC-style evaluation.
"""

from .corpus import (Article, CorpusManifest, IngestReport, Passage,
                     load_corpus, map_doc_ids, segment_passages)
from .evalkit import (MetricReport, Qrels, RunFile, TopicSet, aggregate_qrels,
                      dr_report, ndcg_at_k, precision_recall_at_k,
                      prepare_blind_pool, robustness_em_f1, score_prqa)
from .kg import (KgEmbedding, KnowledgeGraph, TransEModel, build_graph,
                 rank_by_publication_count, recommend)
from .medner import EntityMention, Gazetteer, extract_entities, load_gazetteer
from .search import (FaqStore, Index, Query, SearchConfig, SearchEngine,
                     SearchResponse, build_index, classify_query,
                     expand_query, extract_answer, match_faq, rank_documents,
                     rank_passages)
from .topics import (CuratedTopics, TEN_TOPIC_NAMES, TopicClassifier,
                     ZLabelLda, curate, curate_to_ten, derive_doc_labels,
                     evaluate_f1)
from .vectors import TfidfModel, cosine

__version__ = "0.1.0"

__all__ = [
    "Article", "CorpusManifest", "IngestReport", "Passage", "load_corpus",
    "map_doc_ids", "segment_passages",
    "MetricReport", "Qrels", "RunFile", "TopicSet", "aggregate_qrels",
    "dr_report", "ndcg_at_k", "precision_recall_at_k", "prepare_blind_pool",
    "robustness_em_f1", "score_prqa",
    "KgEmbedding", "KnowledgeGraph", "TransEModel", "build_graph",
    "rank_by_publication_count", "recommend",
    "EntityMention", "Gazetteer", "extract_entities", "load_gazetteer",
    "FaqStore", "Index", "Query", "SearchConfig", "SearchEngine",
    "SearchResponse", "build_index", "classify_query", "expand_query",
    "extract_answer", "match_faq", "rank_documents", "rank_passages",
    "CuratedTopics", "TEN_TOPIC_NAMES", "TopicClassifier", "ZLabelLda",
    "curate", "curate_to_ten", "derive_doc_labels", "evaluate_f1",
    "TfidfModel", "cosine",
]
