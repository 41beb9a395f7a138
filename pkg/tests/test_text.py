from hypothesis import given, strategies as st

from litsearch.text import (normalize_title, sentence_spans, split_sentences,
                            tokenize, tokenize_with_offsets)
from litsearch.vectors import TfidfModel, cosine


def test_tokenize_drops_stopwords_and_short_tokens():
    assert tokenize("The rate of a virus") == ["rate", "virus"]


def test_tokenize_keeps_numbers():
    assert tokenize("SARS outbreak 2002") == ["sars", "outbreak", "2002"]


def test_sentence_split_requires_capital_or_digit():
    text = "We saw approx. results here. Next sentence. 5 more follow."
    # "approx. r" is not a boundary (lowercase continuation)
    assert split_sentences(text) == [
        "We saw approx. results here.", "Next sentence.", "5 more follow."]


def test_sentence_spans_empty():
    assert sentence_spans("") == []
    assert sentence_spans("   ") == []


def test_normalize_title():
    assert normalize_title("COVID-19: A Review!") == "covid 19 a review"
    assert normalize_title("  covid-19   review. ") == "covid 19 review"


@given(st.text(max_size=80))
def test_normalize_title_idempotent(title):
    once = normalize_title(title)
    assert normalize_title(once) == once


@given(st.text(max_size=120))
def test_offsets_point_at_source(text):
    for tok, start, end in tokenize_with_offsets(text):
        assert text[start:end].lower() == tok


def test_tfidf_identical_docs_cosine_one():
    model = TfidfModel().fit({"a": ["x", "y"], "b": ["x", "y"]})
    sim = cosine(model.doc_vectors_["a"], model.doc_vectors_["b"])
    assert abs(sim - 1.0) < 1e-9


def test_tfidf_unit_norm():
    model = TfidfModel().fit({"a": ["x", "y", "y"], "b": ["z"], "c": []})
    for doc_id, vec in model.doc_vectors_.items():
        norm_sq = sum(w * w for w in vec.values())
        if doc_id == "c":
            assert norm_sq == 0.0
        else:
            assert abs(norm_sq - 1.0) < 1e-12


def test_tfidf_transform_matches_fit_vector():
    docs = {"a": ["x", "y"], "b": ["y", "z"]}
    model = TfidfModel().fit(docs)
    assert model.transform(["x", "y"]) == model.doc_vectors_["a"]


def test_tfidf_rank_reduction_keeps_similarity_order():
    docs = {
        "a": ["virus", "vaccine", "trial"],
        "b": ["virus", "vaccine", "study"],
        "c": ["quantum", "laser", "optics"],
    }
    reduced = TfidfModel(reduce_rank=2).fit(docs)
    sim_ab = cosine(reduced.doc_vectors_["a"], reduced.doc_vectors_["b"])
    sim_ac = cosine(reduced.doc_vectors_["a"], reduced.doc_vectors_["c"])
    assert sim_ab > sim_ac
