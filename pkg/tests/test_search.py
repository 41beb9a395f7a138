import json
import math
import random

import pytest

from litsearch.corpus import segment_passages
from litsearch.kg import build_graph
from litsearch.medner import EntityMention
from litsearch.search import (FaqStore, SearchConfig, SearchEngine, bm25_idf,
                              bm25_term_score, build_index, classify_query,
                              expand_query, extract_answer, match_faq,
                              rank_documents, rank_passages)
from litsearch.text import STOPWORDS, tokenize
from litsearch.vectors import TfidfModel

from conftest import make_article

# ---------------------------------------------------------------------------
# Straight-line BM25 reference (independent of the package implementation)

def ref_doc_stats(articles, title_weight=2):
    counts = {}
    for art in articles:
        c = {}
        for _ in range(title_weight):
            for tok in tokenize(art.title):
                c[tok] = c.get(tok, 0) + 1
        for tok in tokenize(art.abstract) + tokenize(art.body):
            c[tok] = c.get(tok, 0) + 1
        counts[art.doc_id] = c
    return counts


def ref_rank(articles, term_weights, k, k1=1.2, b=0.75):
    counts = ref_doc_stats(articles)
    n_docs = len(articles)
    lengths = {d: sum(c.values()) for d, c in counts.items()}
    avg = sum(lengths.values()) / n_docs if n_docs else 0.0
    df = {}
    for term in term_weights:
        df[term] = sum(1 for c in counts.values() if term in c)
    scored = []
    for doc_id, c in counts.items():
        score = 0.0
        for term, weight in term_weights.items():
            tf = c.get(term, 0)
            if tf == 0 or df[term] == 0:
                continue
            idf = math.log(1 + (n_docs - df[term] + 0.5) / (df[term] + 0.5))
            denom = tf + k1 * (1 - b + b * lengths[doc_id] / avg)
            score += weight * idf * tf * (k1 + 1) / denom
        if score > 0:
            scored.append((doc_id, score))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return [d for d, _ in scored[:k]]


# ---------------------------------------------------------------------------
# Index construction

def index_of(articles, **kwargs):
    passages = [p for a in articles for p in segment_passages(a)]
    return build_index(articles, passages, **kwargs)


def test_index_single_doc():
    # title tokens are filtered out (single characters), content indexed once
    idx = index_of([make_article("d", "A", abstract="Covid incubation")])
    assert idx.postings == {"covid": [("d", 1)], "incubation": [("d", 1)]}
    assert idx.n_docs == 1
    assert idx.doc_lengths["d"] == 2


def test_index_title_counted_twice():
    idx = index_of([make_article("d", "Covid study", abstract="The study")])
    assert idx.postings["covid"] == [("d", 2)]
    assert idx.postings["study"] == [("d", 3)]


def test_index_stopword_only_doc():
    idx = index_of([make_article("d", "A", abstract="the of and is")])
    assert idx.doc_lengths["d"] == 0
    assert idx.postings == {}


def test_index_matches_brute_force_histogram():
    rng = random.Random(0)
    vocab = [f"term{i}" for i in range(15)]
    articles = [
        make_article(f"d{i:02d}", f"Title {rng.choice(vocab)}",
                     abstract=" ".join(rng.choices(vocab, k=rng.randint(3, 25))))
        for i in range(20)]
    idx = index_of(articles)
    expected = ref_doc_stats(articles)
    for term, plist in idx.postings.items():
        assert plist == sorted(plist)
        for doc_id, tf in plist:
            assert expected[doc_id][term] == tf
    for doc_id, c in expected.items():
        assert idx.doc_lengths[doc_id] == sum(c.values())
        for term, tf in c.items():
            assert (doc_id, tf) in idx.postings[term]


# ---------------------------------------------------------------------------
# Query classification

def test_keyword_query():
    q = classify_query("coronavirus origin")
    assert q.mode == "keyword"
    assert q.answer_type == "none"
    assert q.focus_terms == ["coronavirus", "origin"]


def test_when_question_is_temporal():
    q = classify_query("When is the salivary viral load highest for COVID-19?")
    assert q.mode == "natural_language"
    assert q.answer_type == "temporal"


def test_which_medications_is_entity_category():
    q = classify_query("Which medications were most beneficial in the 2002 SARS outbreak?")
    assert q.mode == "natural_language"
    assert q.answer_type == "entity_category"
    assert q.entity_category == "Medication"


def test_what_is_definition():
    q = classify_query("What is a spike protein?")
    assert q.answer_type == "definition"


def test_incubation_period_question_is_temporal():
    q = classify_query("What is the incubation period of the virus?")
    assert q.answer_type == "temporal"
    assert set(q.focus_terms) == {"incubation", "period", "virus"}


def test_how_many_is_quantity():
    q = classify_query("How many cases were reported?")
    assert q.answer_type == "quantity"


def test_question_mark_forces_natural_language():
    assert classify_query("incubation period?").mode == "natural_language"


def test_empty_query_rejected():
    with pytest.raises(ValueError):
        classify_query("   ")


def test_forced_mode_overrides_detection():
    assert classify_query("coronavirus", force_mode="natural_language").mode == \
        "natural_language"


# ---------------------------------------------------------------------------
# Expansion

def test_no_gazetteer_hits_no_expansion(med_gazetteer):
    q = expand_query(classify_query("economic impact"), med_gazetteer)
    assert q.expansion_terms == []


def test_cocanonical_expansion(med_gazetteer):
    q = expand_query(classify_query("hcq dosing"), med_gazetteer)
    assert ("hydroxychloroquine", 0.5) in q.expansion_terms


def test_kg_comention_expansion(med_gazetteer):
    # RX009 is mentioned by two articles that also mention chloroquine (RX010)
    def m(cid, text):
        return EntityMention(text, cid, "Medication", frozenset(), 0, len(text))
    articles = [make_article("d1", "One"), make_article("d2", "Two"),
                make_article("d3", "Three")]
    mentions = {
        "d1": [m("RX009", "hcq"), m("RX010", "chloroquine")],
        "d2": [m("RX009", "hydroxychloroquine"), m("RX010", "chloroquine")],
        "d3": [m("RX001", "ribavirin")],
    }
    graph = build_graph(articles, mentions)
    q = expand_query(classify_query("hcq dosing"), med_gazetteer, graph)
    assert ("chloroquine", 0.25) in q.expansion_terms
    # capped at 3 neighbours per entity
    assert all(w in (0.25, 0.5) for _, w in q.expansion_terms)


# ---------------------------------------------------------------------------
# Document ranking

THREE_DOCS = [
    make_article("D1", "A", abstract="coronavirus incubation period study"),
    make_article("D2", "B", abstract="vaccine trial results"),
    make_article("D3", "C", abstract="incubation of poultry eggs"),
]


def test_absent_term_empty_result():
    idx = index_of(THREE_DOCS)
    q = classify_query("zebra")
    assert rank_documents(q, idx, None, 5) == []


def test_three_doc_ranking_matches_brute_force():
    idx = index_of(THREE_DOCS)
    q = classify_query("incubation period")
    got = [d for d, _ in rank_documents(q, idx, None, 3)]
    expected = ref_rank(THREE_DOCS, {t: 1.0 for t in q.focus_terms}, 3)
    assert got == expected
    assert got[0] == "D1"


def test_topic_filter_is_hard():
    labels = {"D2": {"Clinical Treatment"}}
    idx = index_of(THREE_DOCS, doc_topic_labels=labels)
    q = classify_query("vaccine incubation")
    q.topic_filter = {"Clinical Treatment"}
    results = rank_documents(q, idx, None, 5)
    assert {d for d, _ in results} <= {"D2"}


def test_ranking_against_brute_force_on_random_corpora():
    rng = random.Random(1)
    vocab = [f"w{i}" for i in range(25)]
    for trial in range(10):
        articles = [
            make_article(f"d{i:03d}", f"T {rng.choice(vocab)}",
                         abstract=" ".join(rng.choices(vocab, k=rng.randint(2, 30))))
            for i in range(rng.randint(5, 60))]
        idx = index_of(articles)
        terms = rng.sample(vocab, rng.randint(1, 3))
        q = classify_query(" ".join(terms))
        got = [d for d, _ in rank_documents(q, idx, None, 20)]
        assert got == ref_rank(articles, {t: 1.0 for t in q.focus_terms}, 20)


def test_bm25_monotone_in_tf():
    scores = [bm25_term_score(tf, 3, 50, 40.0, 10) for tf in range(1, 30)]
    assert all(b > a for a, b in zip(scores, scores[1:]))


def test_bm25_idf_positive():
    for n, df in [(1, 1), (10, 10), (100, 1), (5, 3)]:
        assert bm25_idf(n, df) > 0


def test_df_zero_term_does_not_change_scores():
    idx = index_of(THREE_DOCS)
    q1 = classify_query("incubation period")
    q2 = classify_query("incubation period qqqq")
    r1 = rank_documents(q1, idx, None, 3)
    r2 = rank_documents(q2, idx, None, 3)
    assert r1 == r2


def test_blended_score_uses_semantic_cosine():
    docs = {a.doc_id: tokenize(a.abstract) for a in THREE_DOCS}
    semantic = TfidfModel().fit(docs)
    idx = index_of(THREE_DOCS)
    q = classify_query("incubation")
    ranked = rank_documents(q, idx, semantic, 3)
    # D1 and D3 both match; blended score must still rank D1 over D3 for a
    # query closer to D1's text
    q2 = classify_query("coronavirus incubation period")
    ranked2 = rank_documents(q2, idx, semantic, 3)
    assert ranked2[0][0] == "D1"
    assert all(s1 >= s2 for (_, s1), (_, s2) in zip(ranked2, ranked2[1:]))
    assert ranked[0][1] <= 1.0 + 1e-9


# ---------------------------------------------------------------------------
# Passage ranking

def test_proximity_prefers_adjacent_terms():
    # identical token content, so equal BM25; only adjacency differs
    art_a = make_article("A", "X", body="alpha beta filler words here now.")
    art_b = make_article("B", "Y", body="alpha filler words here now beta.")
    idx = index_of([art_a, art_b])
    q = classify_query("alpha beta")
    ranked = dict(rank_passages(q, idx, [("A", 1.0), ("B", 1.0)], 10))
    ref_a = next(r for r in idx.passages if r[0] == "A" and
                 idx.passages[r].section == "body")
    ref_b = next(r for r in idx.passages if r[0] == "B" and
                 idx.passages[r].section == "body")
    assert ranked[ref_a] > ranked[ref_b]


def test_no_focus_terms_in_passages_gives_empty():
    idx = index_of(THREE_DOCS)
    q = classify_query("zebra stripes")
    assert rank_passages(q, idx, [("D1", 1.0)], 10) == []


def test_passage_scores_match_exhaustive_oracle():
    rng = random.Random(2)
    vocab = [f"w{i}" for i in range(12)]
    articles = [
        make_article(f"d{i}", f"T {rng.choice(vocab)}",
                     abstract=" ".join(rng.choices(vocab, k=8)),
                     body=". ".join(" ".join(rng.choices(vocab, k=6)).capitalize()
                                    for _ in range(5)) + ".")
        for i in range(6)]
    passages = [p for a in articles for p in segment_passages(a)]
    idx = build_index(articles, passages)
    q = classify_query(" ".join(rng.sample(vocab, 2)))
    top_docs = [(a.doc_id, 1.0) for a in articles[:4]]
    got = rank_passages(q, idx, top_docs, 50)

    # exhaustive reference
    n_passages = len(passages)
    df = {}
    pcounts = {}
    for p in passages:
        c = {}
        for tok in tokenize(p.text):
            c[tok] = c.get(tok, 0) + 1
        pcounts[p.ref()] = c
        for term in c:
            df[term] = df.get(term, 0) + 1
    avg = sum(len(tokenize(p.text)) for p in passages) / n_passages
    expected = []
    allowed = {d for d, _ in top_docs}
    for p in passages:
        if p.doc_id not in allowed:
            continue
        c = pcounts[p.ref()]
        score = 0.0
        for term in q.focus_terms:
            tf = c.get(term, 0)
            if tf and df.get(term):
                idf = math.log(1 + (n_passages - df[term] + 0.5) / (df[term] + 0.5))
                denom = tf + 1.2 * (1 - 0.75 + 0.75 * sum(c.values()) / avg)
                score += idf * tf * 2.2 / denom
        toks = tokenize(p.text)
        present = {t for t in q.focus_terms if t in toks}
        if present:
            best = None
            positions = [(i, t) for i, t in enumerate(toks) if t in present]
            for i, (pos_i, _) in enumerate(positions):
                seen = set()
                for j in range(i, len(positions)):
                    seen.add(positions[j][1])
                    if seen == present:
                        width = positions[j][0] - pos_i + 1
                        best = width if best is None else min(best, width)
                        break
            score += 1.0 / (1.0 + best)
        if score > 0:
            expected.append((p.ref(), score))
    expected.sort(key=lambda pair: (-pair[1], pair[0][0], pair[0][1]))
    assert [r for r, _ in got] == [r for r, _ in expected]
    for (_, s_got), (_, s_exp) in zip(got, expected):
        assert s_got == pytest.approx(s_exp, abs=1e-9)


# ---------------------------------------------------------------------------
# Answer extraction

INCUBATION_PASSAGE = (
    "Studies on the nature of the virus have suggested different incubation "
    "periods of the virus, and reports have suggested a median incubation "
    "period of 5-6 days and a very high symptom probability period of 14 days.")

MEDICATION_PASSAGE = (
    "A number of broad-spectrum antiviral medications were empirically "
    "administered to the SARS patients during the SARS outbreak in 2003. "
    "These medications include ribavirin, HIV protease inhibitors, "
    "corticosteroids, and alpha-interferon (IFN-a). In a retrospective "
    "review of treatment outcomes more data appeared.")


def passage_of(text, doc_id="d", idx=0):
    from litsearch.corpus import Passage
    return Passage(doc_id, idx, text, 0, len(text), "body")


def test_incubation_period_span(med_gazetteer):
    q = classify_query("What is the incubation period of the virus?")
    span = extract_answer(q, passage_of(INCUBATION_PASSAGE), med_gazetteer)
    assert span is not None
    assert span.text == "5-6 days"
    assert INCUBATION_PASSAGE[span.char_start:span.char_end] == "5-6 days"
    assert span.confidence >= 0.25


def test_zero_overlap_no_answer(med_gazetteer):
    q = classify_query("What is the incubation period of the virus?")
    assert extract_answer(q, passage_of("Totally unrelated text about economics. "
                                        "It spans 10 days."), med_gazetteer) is None


def test_medication_listing_span(med_gazetteer):
    q = classify_query("What medications were most beneficial in the SARS outbreak?")
    assert q.answer_type == "entity_category" and q.entity_category == "Medication"
    span = extract_answer(q, passage_of(MEDICATION_PASSAGE), med_gazetteer)
    assert span is not None
    assert MEDICATION_PASSAGE[span.char_start:span.char_end] == "ribavirin"


def test_definition_returns_best_sentence(med_gazetteer):
    q = classify_query("What is a coronavirus?")
    text = ("Weather is unrelated. A coronavirus is a virus with spike "
            "proteins. Another sentence follows.")
    span = extract_answer(q, passage_of(text), med_gazetteer)
    assert span is not None
    assert text[span.char_start:span.char_end].startswith("A coronavirus is")


def test_quantity_span():
    q = classify_query("How many cases were reported?")
    text = "Officials reported 1200 cases during the first wave."
    span = extract_answer(q, passage_of(text), None)
    assert span is not None
    assert "1200" in span.text


# ---------------------------------------------------------------------------
# FAQ matching

FAQ_ENTRIES = [
    ("What is the incubation period of COVID-19?", "About 5-6 days."),
    ("Are masks effective against transmission?", "Yes, they reduce spread."),
]


def test_faq_identity_match():
    store = FaqStore(FAQ_ENTRIES)
    hit = match_faq(FAQ_ENTRIES[0][0], store)
    assert hit is not None
    question, answer, sim = hit
    assert answer == "About 5-6 days."
    assert sim == pytest.approx(1.0, abs=1e-9)


def test_faq_empty_store():
    assert match_faq("anything", FaqStore([])) is None


def test_faq_paraphrase_below_threshold_verified_by_hand():
    store = FaqStore(FAQ_ENTRIES, match_threshold=0.85)
    paraphrase = "How long is the incubation time for the virus?"

    # independent cosine computation with the same tf-idf definition
    def toks(text):
        return tokenize(text)

    n = len(FAQ_ENTRIES)
    df = {}
    for question, _ in FAQ_ENTRIES:
        for t in set(toks(question)):
            df[t] = df.get(t, 0) + 1

    def vec(tokens):
        counts = {}
        for t in tokens:
            if t in df:
                counts[t] = counts.get(t, 0) + 1
        raw = {t: c * (math.log((1 + n) / (1 + df[t])) + 1) for t, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in raw.values()))
        return {t: w / norm for t, w in raw.items()} if norm else raw

    va = vec(toks(paraphrase))
    vb = vec(toks(FAQ_ENTRIES[0][0]))
    hand_cosine = sum(w * vb.get(t, 0.0) for t, w in va.items())
    assert hand_cosine < 0.85
    assert match_faq(paraphrase, store) is None


def test_faq_exact_question_among_several():
    store = FaqStore(FAQ_ENTRIES)
    hit = match_faq("Are masks effective against transmission?", store)
    assert hit is not None and hit[1] == "Yes, they reduce spread."


# ---------------------------------------------------------------------------
# Full pipeline

def engine_with(articles, **kwargs):
    return SearchEngine.from_articles(articles, **kwargs)


def test_empty_corpus_empty_response():
    engine = engine_with([])
    response = engine.search("incubation period")
    assert response.docs == []
    assert response.passages == []
    assert response.answers == []
    assert response.faq_answer is None


def test_faq_hit_does_not_suppress_doc_results(med_gazetteer):
    engine = engine_with(THREE_DOCS, gazetteer=med_gazetteer,
                         faq=FaqStore(FAQ_ENTRIES))
    response = engine.search("What is the incubation period of COVID-19?")
    assert response.faq_answer is not None
    assert response.docs


def test_end_to_end_incubation_query(med_gazetteer):
    articles = [
        make_article("doc1", "Viral Incubation Research",
                     abstract="We study the virus incubation interval.",
                     body=INCUBATION_PASSAGE),
        make_article("doc2", "Vaccine Trials", abstract="Vaccine trial results."),
    ]
    engine = engine_with(articles, gazetteer=med_gazetteer)
    response = engine.search("What is the incubation period of the virus?")
    assert response.docs[0][0] == "doc1"
    assert 0 < len(response.answers) <= 3
    top_answer = response.answers[0]
    passage = engine.index.passages[(top_answer.doc_id, top_answer.passage_index)]
    assert passage.text[top_answer.char_start:top_answer.char_end] == top_answer.text
    assert top_answer.text == "5-6 days"


def test_response_deterministic(med_gazetteer):
    engine = engine_with(THREE_DOCS, gazetteer=med_gazetteer,
                         faq=FaqStore(FAQ_ENTRIES))
    a = json.dumps(engine.search("incubation period study").to_dict(), sort_keys=True)
    engine2 = engine_with(THREE_DOCS, gazetteer=med_gazetteer,
                          faq=FaqStore(FAQ_ENTRIES))
    b = json.dumps(engine2.search("incubation period study").to_dict(), sort_keys=True)
    assert a == b


def test_highlight_cap_and_topic_soundness_fuzzed(med_gazetteer):
    rng = random.Random(9)
    vocab = ["incubation", "vaccine", "virus", "period", "trial", "lung",
             "fever", "policy", "days", "cases"]
    topics = ["Clinical Treatment", "Virology", "Epidemiology"]
    articles = []
    labels = {}
    for i in range(25):
        did = f"d{i:02d}"
        articles.append(make_article(
            did, f"Title {vocab[i % len(vocab)]} {i}",
            abstract=" ".join(rng.choices(vocab, k=12)),
            body=". ".join(" ".join(rng.choices(vocab, k=7)).capitalize()
                           for _ in range(4)) + "."))
        labels[did] = {rng.choice(topics)}
    engine = engine_with(articles, doc_topic_labels=labels, gazetteer=med_gazetteer)
    for _ in range(150):
        raw = " ".join(rng.choices(vocab + ["what", "when", "how"], k=rng.randint(1, 4)))
        topic_filter = set(rng.sample(topics, rng.randint(0, 2)))
        response = engine.search(raw, topic_filter=topic_filter, k=10)
        assert len(response.answers) <= 3
        for doc_id, _ in response.docs:
            if topic_filter:
                assert labels[doc_id] & topic_filter
        scores = [s for _, s in response.docs]
        assert scores == sorted(scores, reverse=True)
