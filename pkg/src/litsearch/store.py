"""Data-directory layout: build artifacts once, load them into a SearchEngine.

Everything is flat JSON/TSV so a build can be inspected and replayed:

    articles.jsonl        one article per line
    manifest.json         corpus manifest
    ingest_report.json    {retained, dropped_duplicates, skipped_rows}
    mentions.json         doc_id -> extracted entity mentions
    doc_topics.json       doc_id -> [topic names]
    curated_topics.json   curated topic scheme
    topic_model.json      LDA checkpoint
    graph.tsv             knowledge-graph triples
    kg_embeddings.json    translational embeddings
    gazetteer.tsv         copied gazetteer
    faq.json              copied FAQ entries
    config.json           search tunables
    sessions.jsonl        query sessions (written by the service)
    feedback.jsonl        feedback events (written by the service)
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from .corpus import Article, CorpusManifest, load_corpus, segment_passages
from .kg import KgEmbedding, build_graph, export_triples, load_triples
from .medner import extract_entities, load_gazetteer, mentions_from_json, mentions_to_json
from .search import FaqStore, SearchConfig, SearchEngine
from .text import STOPWORDS, load_stopwords


def build_data_dir(config_path, data_dir) -> dict:
    """Run ingestion per a build config and materialize the data directory.

    The build config is JSON: {"metadata_csv": ..., "fulltext_dir": ...,
    "gazetteer_tsv": ..., "faq_json": ..., "stopwords": ...,
    "release_tag": ..., "search": {tunables}}. Only metadata_csv is required.
    """
    with open(config_path, encoding="utf-8") as fh:
        build_cfg = json.load(fh)
    if "metadata_csv" not in build_cfg:
        raise ValueError("build config needs a metadata_csv path")

    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    base = Path(config_path).parent

    def resolve(key):
        value = build_cfg.get(key)
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else base / path

    articles, manifest, report = load_corpus(
        resolve("metadata_csv"), resolve("fulltext_dir"),
        release_tag=build_cfg.get("release_tag", ""))

    config = SearchConfig.from_dict(build_cfg.get("search", {}))
    (data_dir / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8")

    with open(data_dir / "articles.jsonl", "w", encoding="utf-8") as fh:
        for art in articles:
            fh.write(json.dumps(art.to_dict(), sort_keys=True) + "\n")
    (data_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), sort_keys=True), encoding="utf-8")
    (data_dir / "ingest_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8")

    stopwords_path = resolve("stopwords")
    if stopwords_path:
        shutil.copyfile(stopwords_path, data_dir / "stopwords.txt")

    n_mentions = 0
    gazetteer_path = resolve("gazetteer_tsv")
    if gazetteer_path:
        shutil.copyfile(gazetteer_path, data_dir / "gazetteer.tsv")
        gaz = load_gazetteer(gazetteer_path)
        mentions = {}
        for art in articles:
            found = extract_entities(f"{art.title}\n{art.abstract}\n{art.body}", gaz)
            if found:
                mentions[art.doc_id] = found
                n_mentions += len(found)
        (data_dir / "mentions.json").write_text(mentions_to_json(mentions),
                                                encoding="utf-8")

    faq_path = resolve("faq_json")
    if faq_path:
        shutil.copyfile(faq_path, data_dir / "faq.json")

    return {
        "data_dir": str(data_dir),
        "retained": report.retained,
        "dropped_duplicates": report.dropped_duplicates,
        "skipped_rows": report.skipped_rows,
        "mentions": n_mentions,
    }


def load_articles(data_dir) -> list[Article]:
    path = Path(data_dir) / "articles.jsonl"
    articles = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                articles.append(Article.from_dict(json.loads(line)))
    return articles


def load_manifest(data_dir) -> CorpusManifest:
    payload = json.loads((Path(data_dir) / "manifest.json").read_text(encoding="utf-8"))
    return CorpusManifest.from_dict(payload)


def save_graph(data_dir, graph) -> None:
    export_triples(graph, Path(data_dir) / "graph.tsv")


def save_embeddings(data_dir, embedding: KgEmbedding) -> None:
    (Path(data_dir) / "kg_embeddings.json").write_text(embedding.to_json(),
                                                       encoding="utf-8")


def load_mentions(data_dir):
    path = Path(data_dir) / "mentions.json"
    if not path.exists():
        return {}
    return mentions_from_json(path.read_text(encoding="utf-8"))


def load_doc_topics(data_dir) -> dict[str, set[str]]:
    path = Path(data_dir) / "doc_topics.json"
    if not path.exists():
        return {}
    raw = json.loads(path.read_text(encoding="utf-8"))
    return {doc_id: set(labels) for doc_id, labels in raw.items()}


def save_doc_topics(data_dir, labels: dict[str, set[str]]) -> None:
    (Path(data_dir) / "doc_topics.json").write_text(
        json.dumps({d: sorted(ls) for d, ls in sorted(labels.items())},
                   indent=2, sort_keys=True), encoding="utf-8")


def load_engine(data_dir) -> SearchEngine:
    """Assemble a SearchEngine from whatever artifacts the data dir holds.

    Articles are required; gazetteer, graph, embeddings, topic labels, and
    FAQ store are optional enrichments.
    """
    data_dir = Path(data_dir)
    if not (data_dir / "articles.jsonl").exists():
        raise FileNotFoundError(f"no articles.jsonl under {data_dir}")
    articles = load_articles(data_dir)

    config = SearchConfig()
    if (data_dir / "config.json").exists():
        config = SearchConfig.from_json(data_dir / "config.json")

    stopwords = STOPWORDS
    if (data_dir / "stopwords.txt").exists():
        stopwords = load_stopwords(data_dir / "stopwords.txt")

    gazetteer = None
    if (data_dir / "gazetteer.tsv").exists():
        gazetteer = load_gazetteer(data_dir / "gazetteer.tsv")

    graph = None
    if (data_dir / "graph.tsv").exists():
        graph = load_triples(data_dir / "graph.tsv")

    embedding = None
    if (data_dir / "kg_embeddings.json").exists():
        embedding = KgEmbedding.from_json(
            (data_dir / "kg_embeddings.json").read_text(encoding="utf-8"))

    faq = None
    if (data_dir / "faq.json").exists():
        faq = FaqStore.from_json(data_dir / "faq.json", config.faq_threshold)

    topic_names = None
    curated_path = data_dir / "curated_topics.json"
    if curated_path.exists():
        from .topics import CuratedTopics
        topic_names = CuratedTopics.from_json(
            curated_path.read_text(encoding="utf-8")).names

    return SearchEngine.from_articles(
        articles,
        mentions=load_mentions(data_dir),
        doc_topic_labels=load_doc_topics(data_dir),
        gazetteer=gazetteer,
        graph=graph,
        kg_embedding=embedding,
        faq=faq,
        topic_names=topic_names,
        config=config,
        stopwords=stopwords,
    )


def rebuild_graph(data_dir):
    """Build the knowledge graph from stored articles, mentions, and labels."""
    articles = load_articles(data_dir)
    graph = build_graph(articles, load_mentions(data_dir), load_doc_topics(data_dir))
    save_graph(data_dir, graph)
    return graph
