"""Build a tiny three-article data dir and serve the search API over it.

Used by the UI integration test: the scripted session queries for the
incubation period, filters by Virology, clicks the top result, and rates it.
"""

import argparse
import json
from pathlib import Path

from litsearch.corpus import Article
from litsearch.kg import TransEModel
from litsearch.service import serve
from litsearch.store import rebuild_graph, save_doc_topics, save_embeddings

ARTICLES = [
    Article(
        doc_id="doc1",
        title="Viral Incubation Research",
        abstract=("Studies on the nature of the virus have suggested a median "
                  "incubation period of 5-6 days. Reports vary across cohorts."),
        authors=("Ann A",),
        cited_doc_ids=("doc2",),
    ),
    Article(
        doc_id="doc2",
        title="Vaccine Trials",
        abstract="Vaccine trial results are reported for the virus.",
        authors=("Bob B",),
    ),
    Article(
        doc_id="doc3",
        title="Mask Policies",
        abstract="Mask policy effects on transmission are analysed.",
        authors=("Cyn C",),
    ),
]
TOPICS = {
    "doc1": {"Virology"},
    "doc2": {"Clinical Treatment"},
    "doc3": {"Public health Policies"},
}


def build(data_dir: Path) -> None:
    data_dir.mkdir(parents=True, exist_ok=True)
    with open(data_dir / "articles.jsonl", "w", encoding="utf-8") as fh:
        for art in ARTICLES:
            fh.write(json.dumps(art.to_dict(), sort_keys=True) + "\n")
    save_doc_topics(data_dir, TOPICS)
    graph = rebuild_graph(data_dir)
    model = TransEModel(dim=8, epochs=30, random_state=0).fit(graph)
    save_embeddings(data_dir, model.embedding())


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--data-dir", required=True)
    args = parser.parse_args()
    data_dir = Path(args.data_dir)
    build(data_dir)
    serve(data_dir, port=args.port)
