"""Command-line entry points for indexing, training, querying, and evaluation.

Exit codes: 0 success, 1 user error (bad input/arguments), 2 internal error.
Output is JSON on stdout unless --format=table.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evalkit, store
from .kg import TransEModel, recommend
from .text import tokenize
from .topics import (TopicClassifier, ZLabelLda, curate, curate_to_ten,
                     derive_doc_labels, evaluate_f1, load_checkpoint,
                     save_checkpoint)


def _emit(payload: dict, fmt: str) -> None:
    if fmt == "table":
        _print_table(payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _print_table(payload: dict, indent: str = "") -> None:
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, dict):
            print(f"{indent}{key}:")
            _print_table(value, indent + "  ")
        elif isinstance(value, list):
            print(f"{indent}{key}: {json.dumps(value)}")
        elif isinstance(value, float):
            print(f"{indent}{key}: {value:.4f}")
        else:
            print(f"{indent}{key}: {value}")


def _load_seeds(path) -> dict[str, set[int]]:
    """Seeds TSV: term <tab> comma-separated topic indices."""
    seeds: dict[str, set[int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"seeds row {lineno}: expected 2 tab-separated fields")
            seeds[parts[0]] = {int(x) for x in parts[1].split(",") if x.strip()}
    return seeds


def _article_texts(data_dir) -> dict[str, str]:
    return {a.doc_id: f"{a.title}\n{a.abstract}\n{a.body}"
            for a in store.load_articles(data_dir)}


def cmd_index_build(args) -> dict:
    return store.build_data_dir(args.config, args.data_dir)


def cmd_topics_train(args) -> dict:
    texts = _article_texts(args.data_dir)
    doc_ids = sorted(texts)
    docs = [tokenize(texts[d]) for d in doc_ids]
    seeds = _load_seeds(args.seeds_tsv) if args.seeds_tsv else None
    model = ZLabelLda(n_topics=args.k, alpha=args.alpha, beta=args.beta,
                      iterations=args.iterations, seeds=seeds,
                      random_state=args.seed, recount_every=args.recount_every)
    model.fit(docs, doc_ids=doc_ids)
    save_checkpoint(model, Path(args.data_dir) / "topic_model.json")
    return {
        "topics": args.k,
        "docs": len(docs),
        "vocab": len(model.vocab_),
        "z_violations": model.z_violations_,
        "top_terms": {str(t): [term for term, _ in model.top_terms(t, 10)]
                      for t in range(args.k)},
    }


def cmd_topics_curate(args) -> dict:
    model = load_checkpoint(Path(args.data_dir) / "topic_model.json")
    if args.ops:
        with open(args.ops, encoding="utf-8") as fh:
            curated = curate(model, json.load(fh))
    else:
        curated = curate_to_ten(model)
    (Path(args.data_dir) / "curated_topics.json").write_text(curated.to_json(),
                                                             encoding="utf-8")
    return {"names": curated.names,
            "retained": len(curated.names),
            "dropped": sum(1 for v in curated.mapping.values() if v is None)}


def cmd_topics_classify(args) -> dict:
    from .topics import CuratedTopics
    data_dir = Path(args.data_dir)
    model = load_checkpoint(data_dir / "topic_model.json")
    curated = CuratedTopics.from_json(
        (data_dir / "curated_topics.json").read_text(encoding="utf-8"))
    gold = derive_doc_labels(model, curated, args.threshold)
    texts = _article_texts(data_dir)
    missing = set(gold) - set(texts)
    if missing:
        raise ValueError(f"topic model covers unknown docs: {sorted(missing)[:5]}")
    clf = TopicClassifier(random_state=args.seed).fit(
        {d: texts[d] for d in gold}, gold, label_set=list(curated.names))
    pred = clf.predict(texts)
    store.save_doc_topics(data_dir, pred)
    report = evaluate_f1({d: gold.get(d, pred[d]) for d in pred}, pred)
    report["docs"] = len(pred)
    return report


def cmd_kg_build(args) -> dict:
    graph = store.rebuild_graph(args.data_dir)
    graph.validate()
    kinds = {}
    for kind, _ in graph.nodes.values():
        kinds[kind] = kinds.get(kind, 0) + 1
    return {"nodes": len(graph.nodes), "triples": len(graph.triples),
            "dangling_citations": graph.dangling_citations, "by_kind": kinds}


def cmd_kg_train(args) -> dict:
    from .kg import load_triples
    graph = load_triples(Path(args.data_dir) / "graph.tsv")
    model = TransEModel(dim=args.dim, epochs=args.epochs, margin=args.margin,
                        learning_rate=args.lr,
                        negatives_per_positive=args.negatives,
                        random_state=args.seed).fit(graph)
    store.save_embeddings(args.data_dir, model.embedding())
    return {"entities": len(model.entity_index_),
            "relations": len(model.relation_index_),
            "dim": args.dim, "epochs": args.epochs,
            "final_loss": model.epoch_losses_[-1]}


def cmd_kg_recommend(args) -> dict:
    engine = store.load_engine(args.data_dir)
    if engine.semantic is None:
        raise ValueError("no documents loaded")
    ranked = recommend(args.doc_id, engine.semantic, engine.kg_embedding,
                       k=args.k, alpha=args.alpha)
    return {"doc_id": args.doc_id,
            "similar": [{"doc_id": d, "similarity": s} for d, s in ranked]}


def cmd_search(args) -> dict:
    engine = store.load_engine(args.data_dir)
    mode = {"kw": "keyword", "nl": "natural_language", None: None}[args.mode]
    topic_filter = set(args.topics or ())
    payload = engine.search_payload(args.query, topic_filter, mode, args.k)
    return {"result": payload}


def cmd_eval_dr(args) -> dict:
    run = evalkit.load_run(args.run)
    qrels = evalkit.load_qrels(args.qrels)
    ks = tuple(int(x) for x in args.ks.split(","))
    recall_ks = tuple(int(x) for x in args.recall_ks.split(","))
    report = evalkit.dr_report(run, qrels, ks, recall_ks, args.ndcg_k)
    return report.to_dict()


def cmd_eval_robustness(args) -> dict:
    run_nq = evalkit.load_run(args.nq_run)
    run_kq = evalkit.load_run(args.kq_run)
    titles = {a.doc_id: a.title for a in store.load_articles(args.data_dir)}
    report = evalkit.robustness_em_f1(run_nq, run_kq, args.k, titles)
    return report.to_dict()


def cmd_eval_pool(args) -> dict:
    with open(args.systems, encoding="utf-8") as fh:
        raw = json.load(fh)
    systems = [(entry["name"], entry["results"]) for entry in raw]
    rows, mapping = evalkit.prepare_blind_pool(systems, rng_seed=args.seed)
    evalkit.save_sheet(rows, args.out_sheet)
    Path(args.out_mapping).write_text(json.dumps(mapping, indent=2, sort_keys=True),
                                      encoding="utf-8")
    return {"rows": len(rows), "sheet": args.out_sheet, "mapping": args.out_mapping}


def cmd_eval_score_prqa(args) -> dict:
    annotations = evalkit.load_annotated_sheet(args.sheet)
    mapping = json.loads(Path(args.mapping).read_text(encoding="utf-8"))
    return evalkit.score_prqa(annotations, mapping)


def cmd_serve(args) -> dict:
    from .service import serve
    serve(args.data_dir, port=args.port, host=args.host)
    return {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litsearch")
    parser.add_argument("--format", choices=("json", "table"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="corpus ingestion and indexing")
    index_sub = p_index.add_subparsers(dest="subcommand", required=True)
    p = index_sub.add_parser("build")
    p.add_argument("config")
    p.add_argument("--data-dir", required=True)
    p.set_defaults(func=cmd_index_build)

    p_topics = sub.add_parser("topics", help="topic modeling and classification")
    topics_sub = p_topics.add_subparsers(dest="subcommand", required=True)
    p = topics_sub.add_parser("train")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds-tsv", default=None)
    p.add_argument("--recount-every", type=int, default=0)
    p.set_defaults(func=cmd_topics_train)
    p = topics_sub.add_parser("curate")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--ops", default=None, help="JSON list of merge/delete/rename ops")
    p.set_defaults(func=cmd_topics_curate)
    p = topics_sub.add_parser("classify")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_topics_classify)

    p_kg = sub.add_parser("kg", help="knowledge graph and embeddings")
    kg_sub = p_kg.add_subparsers(dest="subcommand", required=True)
    p = kg_sub.add_parser("build")
    p.add_argument("--data-dir", required=True)
    p.set_defaults(func=cmd_kg_build)
    p = kg_sub.add_parser("train")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--negatives", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kg_train)
    p = kg_sub.add_parser("recommend")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--doc-id", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(func=cmd_kg_recommend)

    p = sub.add_parser("search", help="query the engine")
    p.add_argument("query")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--topics", nargs="*", default=None)
    p.add_argument("--mode", choices=("kw", "nl"), default=None)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_search)

    p_eval = sub.add_parser("eval", help="retrieval evaluation")
    eval_sub = p_eval.add_subparsers(dest="subcommand", required=True)
    p = eval_sub.add_parser("dr")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--ks", default="1,5,10,20")
    p.add_argument("--recall-ks", default="10,20")
    p.add_argument("--ndcg-k", type=int, default=20)
    p.set_defaults(func=cmd_eval_dr)
    p = eval_sub.add_parser("robustness")
    p.add_argument("--nq-run", required=True)
    p.add_argument("--kq-run", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--data-dir", required=True)
    p.set_defaults(func=cmd_eval_robustness)
    p = eval_sub.add_parser("pool")
    p.add_argument("--systems", required=True)
    p.add_argument("--out-sheet", required=True)
    p.add_argument("--out-mapping", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval_pool)
    p = eval_sub.add_parser("score-prqa")
    p.add_argument("--sheet", required=True)
    p.add_argument("--mapping", required=True)
    p.set_defaults(func=cmd_eval_score_prqa)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        payload = args.func(args)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report and exit 2
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, args.format)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
