"""HTTP API over the search engine plus feedback capture.

Queries create a persisted QuerySession; result clicks and explicit up/down
ratings append FeedbackEvents to a durable JSON-lines log. Feedback is
captured but never consulted by ranking.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .kg import recommend
from .search import SearchEngine

FEEDBACK_KINDS = ("click", "rating")
RATINGS = ("up", "down")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class QuerySession:
    query_id: str
    raw: str
    topic_filter: list[str]
    mode: str
    doc_ids: list[str]
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "raw": self.raw,
            "topic_filter": self.topic_filter,
            "mode": self.mode,
            "doc_ids": self.doc_ids,
            "timestamp": self.timestamp,
        }


@dataclass
class FeedbackLog:
    """Append-only JSON-lines event log, idempotent on event_id."""
    path: Path
    seen: set[str] = field(default_factory=set)

    def __post_init__(self):
        self.path = Path(self.path)
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self.seen.add(json.loads(line)["event_id"])

    def append(self, event: dict) -> bool:
        if event["event_id"] in self.seen:
            return False
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
        self.seen.add(event["event_id"])
        return True


class AppState:
    def __init__(self, engine: SearchEngine | None, data_dir=None):
        self.engine = engine
        self.data_dir = Path(data_dir) if data_dir else None
        feedback_path = (self.data_dir / "feedback.jsonl") if self.data_dir \
            else Path("feedback.jsonl")
        self.feedback = FeedbackLog(feedback_path)
        self.sessions: dict[str, QuerySession] = {}
        self._load_sessions()

    @property
    def sessions_path(self) -> Path | None:
        return (self.data_dir / "sessions.jsonl") if self.data_dir else None

    def _load_sessions(self) -> None:
        path = self.sessions_path
        if path is None or not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    raw = json.loads(line)
                    self.sessions[raw["query_id"]] = QuerySession(**raw)

    def record_session(self, session: QuerySession) -> None:
        self.sessions[session.query_id] = session
        path = self.sessions_path
        if path is not None:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(session.to_dict(), sort_keys=True) + "\n")


def _parse_topics(topics: list[str] | None) -> set[str]:
    selected: set[str] = set()
    for chunk in topics or ():
        selected.update(t.strip() for t in chunk.split(",") if t.strip())
    return selected


def create_app(engine: SearchEngine | None = None, data_dir=None) -> FastAPI:
    app = FastAPI(title="litsearch")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    state = AppState(engine, data_dir)
    app.state.litsearch = state

    def require_engine() -> SearchEngine:
        if state.engine is None:
            raise HTTPException(status_code=503, detail="index not ready")
        return state.engine

    @app.get("/search")
    def http_search(q: str = "", topics: list[str] = Query(default=None),
                    mode: str | None = None, k: int = 10):
        engine = require_engine()
        if not q.strip():
            raise HTTPException(status_code=400, detail="empty query")
        if mode is not None and mode not in ("keyword", "natural_language"):
            raise HTTPException(status_code=400, detail="mode must be keyword|natural_language")
        if k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        topic_filter = _parse_topics(topics)
        payload = engine.search_payload(q, topic_filter, mode, k)
        query_id = uuid.uuid4().hex
        state.record_session(QuerySession(
            query_id=query_id,
            raw=q,
            topic_filter=sorted(topic_filter),
            mode=payload["mode"],
            doc_ids=[d["doc_id"] for d in payload["docs"]],
            timestamp=_now(),
        ))
        return {"query_id": query_id, "result": payload}

    @app.get("/topics")
    def http_topics():
        engine = require_engine()
        return {"topics": engine.topic_names}

    @app.get("/articles/{doc_id}")
    def http_article(doc_id: str):
        engine = require_engine()
        art = engine.articles.get(doc_id)
        if art is None:
            raise HTTPException(status_code=404, detail=f"unknown article {doc_id}")
        payload = art.to_dict()
        payload["topics"] = sorted(engine.index.doc_topics.get(doc_id, ()))
        return payload

    @app.get("/articles/{doc_id}/similar")
    def http_similar(doc_id: str, k: int = 10, alpha: float | None = None):
        engine = require_engine()
        if doc_id not in engine.articles:
            raise HTTPException(status_code=404, detail=f"unknown article {doc_id}")
        if engine.semantic is None:
            raise HTTPException(status_code=503, detail="semantic vectors not built")
        if alpha is None:
            alpha = engine.config.recommend_alpha
        if alpha < 1.0 and engine.kg_embedding is None:
            raise HTTPException(status_code=503, detail="kg embeddings not built")
        try:
            ranked = recommend(doc_id, engine.semantic, engine.kg_embedding,
                               k=k, alpha=alpha)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"similar": [
            {"doc_id": d, "similarity": s,
             "title": engine.articles[d].title if d in engine.articles else ""}
            for d, s in ranked
        ]}

    @app.get("/articles/{doc_id}/citations")
    def http_citations(doc_id: str):
        engine = require_engine()
        if doc_id not in engine.articles:
            raise HTTPException(status_code=404, detail=f"unknown article {doc_id}")
        if engine.graph is None:
            return {"cites": [], "cited_by": []}
        try:
            return engine.graph.citation_neighbors(doc_id)
        except KeyError:
            return {"cites": [], "cited_by": []}

    @app.post("/feedback", status_code=204)
    async def http_feedback(request: Request):
        require_engine()
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body must be JSON")
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="body must be a JSON object")
        query_id = body.get("query_id")
        doc_id = body.get("doc_id")
        kind = body.get("kind")
        rating = body.get("rating")
        if not query_id or not doc_id or kind not in FEEDBACK_KINDS:
            raise HTTPException(status_code=400, detail="query_id, doc_id, kind required")
        if (kind == "rating") != (rating is not None):
            raise HTTPException(status_code=400,
                                detail="rating present iff kind is rating")
        if rating is not None and rating not in RATINGS:
            raise HTTPException(status_code=400, detail="rating must be up|down")
        if query_id not in state.sessions:
            raise HTTPException(status_code=404, detail=f"unknown query_id {query_id}")
        event = {
            "event_id": str(body.get("event_id") or uuid.uuid4().hex),
            "query_id": query_id,
            "doc_id": doc_id,
            "kind": kind,
            "rating": rating,
            "timestamp": _now(),
        }
        if "rank" in body:
            event["rank"] = body["rank"]
        state.feedback.append(event)
        return Response(status_code=204)

    return app


def serve(data_dir, port: int = 8000, host: str = "127.0.0.1") -> None:
    import uvicorn

    from .store import load_engine
    engine = load_engine(data_dir)
    uvicorn.run(create_app(engine, data_dir), host=host, port=port, log_level="warning")
