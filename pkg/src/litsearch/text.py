"""Shared text processing: tokenization, sentence splitting, title normalization.

Every module that touches raw text (indexing, topic modeling, entity matching,
title comparison) goes through these helpers so that the whole pipeline agrees
on one canonical form.
"""

from __future__ import annotations

import re

# Fixed shipped stopword list. Deliberately small and boring: common English
# function words only, so that domain terms are never swallowed.
STOPWORDS = frozenset(
    """
    a an the and or but if then else of in on at to from by with without as
    that this these those it its be been being is are was were am do does did
    doing have has had having for not no nor so than too very can will just
    should could would may might must shall we you they he she i me my our
    your their his her them us him all any both each few more most other some
    such only own same s t don about against between into through during
    before after above below up down out off over under again further once
    here there when where why how what which who whom
    """.split()
)

# Words that open a natural-language question.
INTERROGATIVES = frozenset(
    ["what", "when", "which", "who", "how", "why", "is", "are", "do", "does", "can"]
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_TOKEN_ANYCASE_RE = re.compile(r"[A-Za-z0-9]+")
_WS_RE = re.compile(r"\s+")
# A sentence ends on terminal punctuation followed by whitespace and an
# uppercase letter or digit.
_SENT_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s+[A-Z0-9])")


def tokenize(text: str, drop_stopwords: bool = True, min_len: int = 2,
             stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Lowercase, split on non-alphanumeric, drop stopwords and short tokens."""
    tokens = _TOKEN_RE.findall(text.lower())
    if min_len > 1:
        tokens = [t for t in tokens if len(t) >= min_len]
    if drop_stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


def tokenize_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """All alphanumeric tokens (lowercased) with [start, end) char offsets.

    Nothing is filtered here; entity matching needs the faithful token stream.
    """
    return [(m.group().lower(), m.start(), m.end())
            for m in _TOKEN_ANYCASE_RE.finditer(text)]


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """[start, end) spans of sentences, whitespace-trimmed, in order."""
    bounds = [m.end() for m in _SENT_BOUNDARY_RE.finditer(text)]
    bounds.append(len(text))
    spans = []
    prev = 0
    for b in bounds:
        seg = text[prev:b]
        lead = len(seg) - len(seg.lstrip())
        trail = len(seg) - len(seg.rstrip())
        start, end = prev + lead, b - trail
        if end > start:
            spans.append((start, end))
        prev = b
    return spans


def split_sentences(text: str) -> list[str]:
    return [text[s:e] for s, e in sentence_spans(text)]


def normalize_title(title: str) -> str:
    """Canonical title form: lowercase, strip non-alphanumeric, collapse whitespace."""
    lowered = title.lower()
    cleaned = re.sub(r"[^a-z0-9]+", " ", lowered)
    return _WS_RE.sub(" ", cleaned).strip()


def normalize_name(name: str) -> str:
    """Author/institution identity: lowercased, whitespace-collapsed full string."""
    return _WS_RE.sub(" ", name.strip().lower())


def load_stopwords(path) -> frozenset[str]:
    """Stopword file: one term per line, blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())
