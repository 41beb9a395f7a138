"""Dictionary-based biomedical entity recognition.

A gazetteer maps surface forms to canonical entities in one of five
categories; extraction is greedy longest-match over token n-grams, with a
NegEx-style negation window. Mentions feed query expansion, answer typing,
and knowledge-graph construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .text import sentence_spans, tokenize_with_offsets

CATEGORIES = frozenset({
    "Anatomy",
    "MedicalCondition",
    "Medication",
    "ProtectedHealthInformation",
    "TestTreatmentProcedure",
})
TRAITS = frozenset({"Negation", "Diagnosis", "Sign", "Symptom"})
NEGATION_CUES = frozenset({"no", "not", "without", "denies"})


def normalize_surface(text: str) -> str:
    """Canonical surface form: lowercase tokens joined by single spaces."""
    return " ".join(tok for tok, _, _ in tokenize_with_offsets(text))


@dataclass
class Gazetteer:
    # normalized surface form -> (canonical_id, category)
    entries: dict[str, tuple[str, str]] = field(default_factory=dict)
    # normalized surface form -> static traits (Diagnosis/Sign/Symptom)
    traits: dict[str, frozenset[str]] = field(default_factory=dict)
    max_ngram: int = 0

    def add(self, surface: str, canonical_id: str, category: str,
            traits: frozenset[str] = frozenset()) -> None:
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        bad = traits - TRAITS
        if bad:
            raise ValueError(f"unknown traits {sorted(bad)}")
        key = normalize_surface(surface)
        if not key:
            raise ValueError(f"empty surface form {surface!r}")
        self.entries[key] = (canonical_id, category)
        if traits:
            self.traits[key] = frozenset(traits)
        self.max_ngram = max(self.max_ngram, len(key.split(" ")))

    def surfaces_for(self, canonical_id: str) -> list[str]:
        """All surface forms mapping to one canonical entity, sorted."""
        return sorted(s for s, (cid, _) in self.entries.items() if cid == canonical_id)


def load_gazetteer(path) -> Gazetteer:
    """Load a TSV gazetteer: surface_form, canonical_id, category, and an
    optional fourth column of comma-separated traits. Unknown category or
    trait labels fail the load, naming the offending row.
    """
    gaz = Gazetteer()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise ValueError(f"gazetteer row {lineno}: expected >= 3 tab-separated fields")
            surface, canonical_id, category = parts[0], parts[1], parts[2]
            traits = frozenset(
                t.strip() for t in parts[3].split(",") if t.strip()
            ) if len(parts) > 3 else frozenset()
            try:
                gaz.add(surface, canonical_id, category, traits)
            except ValueError as exc:
                raise ValueError(f"gazetteer row {lineno}: {exc}") from exc
    return gaz


@dataclass(frozen=True)
class EntityMention:
    text: str
    canonical_id: str
    category: str
    traits: frozenset[str]
    char_start: int
    char_end: int
    score: float = 1.0

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "canonical_id": self.canonical_id,
            "category": self.category,
            "traits": sorted(self.traits),
            "char_start": self.char_start,
            "char_end": self.char_end,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntityMention":
        return cls(d["text"], d["canonical_id"], d["category"],
                   frozenset(d.get("traits", ())), d["char_start"],
                   d["char_end"], d.get("score", 1.0))


def extract_entities(text: str, gaz: Gazetteer,
                     negation_window: int = 3) -> list[EntityMention]:
    """Greedy longest-match, left-to-right extraction over token n-grams.

    Matches never overlap. The Negation trait is set when a negation cue
    appears within ``negation_window`` tokens to the left, inside the same
    sentence; Diagnosis/Sign/Symptom traits are copied from the gazetteer.
    """
    if not gaz.entries:
        return []
    tokens = tokenize_with_offsets(text)
    sentences = sentence_spans(text)

    def sentence_start(char_pos: int) -> int:
        for s, e in sentences:
            if s <= char_pos < e:
                return s
        return 0

    mentions = []
    i = 0
    while i < len(tokens):
        matched = False
        for n in range(min(gaz.max_ngram, len(tokens) - i), 0, -1):
            key = " ".join(tok for tok, _, _ in tokens[i:i + n])
            hit = gaz.entries.get(key)
            if hit is None:
                continue
            canonical_id, category = hit
            start = tokens[i][1]
            end = tokens[i + n - 1][2]
            traits = set(gaz.traits.get(key, ()))
            sent_start = sentence_start(start)
            for j in range(max(0, i - negation_window), i):
                tok, tok_start, _ = tokens[j]
                if tok_start >= sent_start and tok in NEGATION_CUES:
                    traits.add("Negation")
                    break
            mentions.append(EntityMention(
                text=text[start:end],
                canonical_id=canonical_id,
                category=category,
                traits=frozenset(traits),
                char_start=start,
                char_end=end,
            ))
            i += n
            matched = True
            break
        if not matched:
            i += 1
    return mentions


def mentions_to_json(mentions_by_doc: dict[str, list[EntityMention]]) -> str:
    return json.dumps(
        {doc: [m.to_dict() for m in ms] for doc, ms in sorted(mentions_by_doc.items())},
        indent=2, sort_keys=True,
    )


def mentions_from_json(payload: str) -> dict[str, list[EntityMention]]:
    raw = json.loads(payload)
    return {doc: [EntityMention.from_dict(m) for m in ms] for doc, ms in raw.items()}
