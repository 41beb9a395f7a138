import json
from pathlib import Path

import numpy as np
import pytest

from litsearch.corpus import Article
from litsearch.medner import Gazetteer

DATA_DIR = Path(__file__).parent / "data"


def synthetic_topic_corpus(n_docs=300, vocab_size=60, n_topics=3, doc_len=40,
                           seed=42):
    """Corpus drawn from known topic-word distributions.

    Each topic owns a disjoint block of the vocabulary holding 80% of its
    mass; document mixtures are sparse Dirichlet draws. Returns (docs as
    token lists, true topic-word matrix, vocab list).
    """
    rng = np.random.default_rng(seed)
    vocab = [f"w{i:02d}" for i in range(vocab_size)]
    block = vocab_size // n_topics
    phi = np.full((n_topics, vocab_size), 0.2 / vocab_size)
    for t in range(n_topics):
        phi[t, t * block:(t + 1) * block] += 0.8 / block
    phi /= phi.sum(axis=1, keepdims=True)
    docs = []
    for _ in range(n_docs):
        theta = rng.dirichlet([0.2] * n_topics)
        zs = rng.choice(n_topics, size=doc_len, p=theta)
        docs.append([vocab[rng.choice(vocab_size, p=phi[z])] for z in zs])
    return docs, phi, vocab


def aligned_topic_cosines(model, true_phi, vocab):
    """Cosine between each true topic and its best-matching learned topic
    under a one-to-one (Hungarian) alignment."""
    from scipy.optimize import linear_sum_assignment

    learned = model.phi()
    learned_cols = np.array([[learned[t, model.vocab_[w]] for w in vocab]
                             for t in range(model.n_topics)])
    sims = np.zeros((true_phi.shape[0], learned_cols.shape[0]))
    for i in range(true_phi.shape[0]):
        for j in range(learned_cols.shape[0]):
            a, b = true_phi[i], learned_cols[j]
            sims[i, j] = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    rows, cols = linear_sum_assignment(-sims)
    return [sims[i, j] for i, j in zip(rows, cols)]


def make_article(doc_id, title, abstract="", body="", authors=(), institutions=(),
                 cited=(), date=None, source="test"):
    return Article(doc_id=doc_id, title=title, abstract=abstract, body=body,
                   authors=tuple(authors), institutions=tuple(institutions),
                   cited_doc_ids=tuple(cited), publish_date=date, source=source)


@pytest.fixture(scope="session")
def golden_50():
    with open(DATA_DIR / "articles_50_golden.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture()
def med_gazetteer():
    gaz = Gazetteer()
    gaz.add("ribavirin", "RX001", "Medication")
    gaz.add("hydroxychloroquine", "RX009", "Medication")
    gaz.add("hcq", "RX009", "Medication")
    gaz.add("chloroquine", "RX010", "Medication")
    gaz.add("corticosteroids", "RX011", "Medication")
    gaz.add("HIV protease inhibitors", "RX012", "Medication")
    gaz.add("pneumonia", "DX001", "MedicalCondition", frozenset({"Diagnosis"}))
    gaz.add("acute respiratory distress", "DX002", "MedicalCondition")
    gaz.add("respiratory distress", "DX003", "MedicalCondition")
    gaz.add("fever", "SX001", "MedicalCondition", frozenset({"Symptom"}))
    gaz.add("lung", "AN001", "Anatomy")
    gaz.add("pcr test", "TP001", "TestTreatmentProcedure")
    return gaz


def write_metadata_csv(path, rows):
    import csv
    fields = ["doc_id", "title", "abstract", "authors", "publish_date",
              "institutions", "cited_doc_ids", "source"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({f: row.get(f, "") for f in fields})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one PASS/FAIL line per acceptance criterion."""
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0] if marker.args else item.name
    status = "PASS" if rep.passed else "FAIL"
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(f"ACCEPTANCE {status}: {name}")
