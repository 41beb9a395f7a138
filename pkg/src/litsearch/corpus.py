"""Corpus ingestion: metadata CSV + full-text JSON into normalized articles.

Handles title-based deduplication across releases, passage segmentation with
exact character offsets, and identifier mapping between corpus versions.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .text import normalize_title, sentence_spans

SECTIONS = ("title", "abstract", "body")


@dataclass(frozen=True)
class Article:
    doc_id: str
    title: str
    abstract: str = ""
    body: str = ""
    authors: tuple[str, ...] = ()
    institutions: tuple[str, ...] = ()
    cited_doc_ids: tuple[str, ...] = ()
    publish_date: str | None = None
    source: str = ""

    def section_text(self, section: str) -> str:
        if section not in SECTIONS:
            raise ValueError(f"unknown section {section!r}")
        return getattr(self, section if section != "title" else "title")

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "abstract": self.abstract,
            "body": self.body,
            "authors": list(self.authors),
            "institutions": list(self.institutions),
            "cited_doc_ids": list(self.cited_doc_ids),
            "publish_date": self.publish_date,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Article":
        return cls(
            doc_id=d["doc_id"],
            title=d["title"],
            abstract=d.get("abstract", ""),
            body=d.get("body", ""),
            authors=tuple(d.get("authors", ())),
            institutions=tuple(d.get("institutions", ())),
            cited_doc_ids=tuple(d.get("cited_doc_ids", ())),
            publish_date=d.get("publish_date"),
            source=d.get("source", ""),
        )


@dataclass(frozen=True)
class Passage:
    doc_id: str
    passage_index: int
    text: str
    char_start: int
    char_end: int
    section: str

    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.passage_index)


@dataclass
class CorpusManifest:
    release_tag: str
    doc_count: int
    title_index: dict[str, str] = field(default_factory=dict)

    @property
    def doc_ids(self) -> set[str]:
        return set(self.title_index.values())

    def to_dict(self) -> dict:
        return {
            "release_tag": self.release_tag,
            "doc_count": self.doc_count,
            "title_index": self.title_index,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusManifest":
        return cls(d["release_tag"], d["doc_count"], dict(d["title_index"]))


@dataclass
class IngestReport:
    retained: int = 0
    dropped_duplicates: int = 0
    skipped_rows: int = 0

    def to_dict(self) -> dict:
        return {
            "retained": self.retained,
            "dropped_duplicates": self.dropped_duplicates,
            "skipped_rows": self.skipped_rows,
        }


def _split_multi(value: str | None) -> tuple[str, ...]:
    if not value:
        return ()
    return tuple(part.strip() for part in value.split(";") if part.strip())


def _parse_date(value: str | None) -> str | None:
    if not value:
        return None
    try:
        return date.fromisoformat(value.strip()).isoformat()
    except ValueError:
        return None


def _read_fulltext(fulltext_dir, doc_id: str) -> str:
    """Full-text file: {"doc_id": ..., "body_text": [{"text": ...}, ...]}."""
    if fulltext_dir is None:
        return ""
    path = Path(fulltext_dir) / f"{doc_id}.json"
    if not path.exists():
        return ""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return "\n".join(block.get("text", "") for block in payload.get("body_text", []))


def load_corpus(metadata_path, fulltext_dir=None, release_tag: str = "",
                ) -> tuple[list[Article], CorpusManifest, IngestReport]:
    """Parse a metadata CSV (plus optional full-text dir) into Articles.

    Rows missing a doc_id, or whose title normalizes to empty, are skipped.
    Rows whose normalized title collides with an already-seen one are
    deduplicated: the lexicographically smallest doc_id wins. Missing
    full-text files are not an error; the article simply has an empty body.
    """
    report = IngestReport()
    rows: dict[str, dict] = {}
    order: list[str] = []
    with open(metadata_path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            doc_id = (row.get("doc_id") or "").strip()
            title = (row.get("title") or "").strip()
            if not doc_id or not normalize_title(title):
                report.skipped_rows += 1
                continue
            if doc_id in rows:
                warnings.warn(f"duplicate doc_id {doc_id!r}; keeping first row")
                report.skipped_rows += 1
                continue
            rows[doc_id] = row
            order.append(doc_id)

    # Title dedup: group rows by normalized title, keep smallest doc_id.
    by_title: dict[str, str] = {}
    for doc_id in order:
        key = normalize_title(rows[doc_id]["title"])
        keep = by_title.get(key)
        if keep is None or doc_id < keep:
            by_title[key] = doc_id
    retained_ids = set(by_title.values())
    report.dropped_duplicates = len(rows) - len(retained_ids)

    articles = []
    for doc_id in sorted(retained_ids):
        row = rows[doc_id]
        cited = tuple(c for c in _split_multi(row.get("cited_doc_ids")) if c != doc_id)
        articles.append(Article(
            doc_id=doc_id,
            title=row["title"].strip(),
            abstract=(row.get("abstract") or "").strip(),
            body=_read_fulltext(fulltext_dir, doc_id),
            authors=_split_multi(row.get("authors")),
            institutions=_split_multi(row.get("institutions")),
            cited_doc_ids=cited,
            publish_date=_parse_date(row.get("publish_date")),
            source=(row.get("source") or "").strip(),
        ))
    report.retained = len(articles)
    manifest = CorpusManifest(
        release_tag=release_tag,
        doc_count=len(articles),
        title_index={normalize_title(a.title): a.doc_id for a in articles},
    )
    return articles, manifest, report


def segment_passages(article: Article, window: int = 3, stride: int = 2) -> list[Passage]:
    """Split an article into passages: title and abstract become one passage
    each; the body is covered by sliding windows of ``window`` sentences
    advanced by ``stride``. Offsets are relative to the section's own text and
    reconstruct the passage exactly.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if not 1 <= stride <= window:
        raise ValueError("stride must satisfy 1 <= stride <= window")

    passages: list[Passage] = []

    def add(section: str, start: int, end: int) -> None:
        text = article.section_text(section)[start:end]
        passages.append(Passage(article.doc_id, len(passages), text, start, end, section))

    for section in ("title", "abstract"):
        text = article.section_text(section)
        if text.strip():
            start = len(text) - len(text.lstrip())
            add(section, start, len(text.rstrip()))

    spans = sentence_spans(article.body)
    start_idx = 0
    while start_idx < len(spans):
        end_idx = min(start_idx + window, len(spans))
        add("body", spans[start_idx][0], spans[end_idx - 1][1])
        if end_idx == len(spans):
            break
        start_idx += stride
    return passages


def map_doc_ids(external_ids: list[tuple[str, str]], manifest: CorpusManifest,
                ) -> dict[str, str | None]:
    """Map (id, title) pairs onto the manifest's corpus.

    Exact doc_id match wins; otherwise the normalized title is looked up;
    otherwise the id maps to None (unmapped). Callers drop unmapped entries.
    """
    known = manifest.doc_ids
    mapping: dict[str, str | None] = {}
    for ext_id, title in external_ids:
        if ext_id in known:
            mapping[ext_id] = ext_id
            continue
        mapping[ext_id] = manifest.title_index.get(normalize_title(title or ""))
    return mapping
