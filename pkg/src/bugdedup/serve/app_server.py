"""App server: front-end facing check/decision endpoints.

Owns the corpus and the pair featurization; calls the embedding server for
document vectors and the model server for probabilities, keeping the model
server purely numeric. A check caches its candidates under a request_id
(TTL-bounded) so a later decision can reference them; the provisional bug
is persisted only when the decision arrives.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import httpx
import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..corpus import BugReport, Corpus, Status, bug_to_record, save_jsonl
from ..embedding import DocEmbedding
from ..features import FEATURE_SCHEMA, PosLexicon, pair_features, prepare_text
from ..pairs import candidate_set
from ..preprocess import CleanConfig

_RETRY_AFTER_SECONDS = 2


@dataclass
class _CacheEntry:
    expires_at: float
    provisional: BugReport
    candidate_ids: list[str]


class CorpusStore:
    """Single-writer corpus holder; readers take immutable snapshots."""

    def __init__(self, corpus: Corpus, persist_path: str | Path | None = None):
        self._lock = threading.Lock()
        self._corpus = corpus
        self._persist_path = Path(persist_path) if persist_path else None

    def snapshot(self) -> Corpus:
        return self._corpus

    def add(self, bug: BugReport) -> None:
        with self._lock:
            updated = self._corpus.with_bug(bug)
            if self._persist_path is not None:
                save_jsonl(updated, self._persist_path)
            self._corpus = updated

    def next_web_id(self) -> str:
        with self._lock:
            n = len(self._corpus)
            while f"WEB-{n}" in self._corpus:
                n += 1
            return f"WEB-{n}"


class CheckCache:
    def __init__(self, ttl_seconds: float):
        self.ttl = ttl_seconds
        self._lock = threading.Lock()
        self._entries: dict[str, _CacheEntry] = {}

    def put(self, request_id: str, entry: _CacheEntry) -> None:
        with self._lock:
            now = time.monotonic()
            self._entries = {
                k: v for k, v in self._entries.items() if v.expires_at > now
            }
            self._entries[request_id] = entry

    def pop(self, request_id: str) -> _CacheEntry | None:
        with self._lock:
            entry = self._entries.pop(request_id, None)
        if entry is None or entry.expires_at <= time.monotonic():
            return None
        return entry


def _validate_check(payload: dict) -> tuple[dict, list[str]]:
    fields = {}
    for name in ("headline", "description", "project", "product", "component"):
        value = payload.get(name)
        fields[name] = "" if value is None else str(value)
    errors = []
    if not fields["product"].strip():
        errors.append("product")
    if not fields["component"].strip():
        errors.append("component")
    if not fields["headline"].strip() and not fields["description"].strip():
        errors.append("headline")
        errors.append("description")
    return fields, errors


def build_app_server(
    corpus: Corpus,
    cfg: CleanConfig,
    model_url: str,
    embed_url: str,
    top_k: int = 10,
    ttl_seconds: float = 900.0,
    persist_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
    lexicon: PosLexicon | None = None,
    embed_transport: httpx.AsyncBaseTransport | None = None,
    model_transport: httpx.AsyncBaseTransport | None = None,
) -> FastAPI:
    """Assemble the app server; transports may be injected for in-process tests."""
    embed_client = httpx.AsyncClient(
        base_url=embed_url, transport=embed_transport, timeout=30.0
    )
    model_client = httpx.AsyncClient(
        base_url=model_url, transport=model_transport, timeout=30.0
    )

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        try:
            yield
        finally:
            await embed_client.aclose()
            await model_client.aclose()

    app = FastAPI(title="bugdedup app server", lifespan=lifespan)
    store = CorpusStore(corpus, persist_path)
    cache = CheckCache(ttl_seconds)
    app.state.store = store
    app.state.cache = cache

    def _unavailable(which: str, detail: str) -> JSONResponse:
        return JSONResponse(
            status_code=503,
            content={"detail": f"{which} unavailable: {detail}"},
            headers={"Retry-After": str(_RETRY_AFTER_SECONDS)},
        )

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "component": "app-server",
            "version": __version__,
            "pid": os.getpid(),
            "corpus_size": len(store.snapshot()),
        }

    @app.get("/api/v1/bugs/{bug_id}")
    def get_bug(bug_id: str):
        snapshot = store.snapshot()
        if bug_id not in snapshot:
            return JSONResponse(
                status_code=404, content={"detail": f"unknown bug {bug_id}"}
            )
        return bug_to_record(snapshot.get(bug_id))

    @app.post("/api/v1/check")
    async def check(payload: dict):
        fields, errors = _validate_check(payload)
        if errors:
            return JSONResponse(
                status_code=400,
                content={"detail": "invalid request", "fields": errors},
            )
        request_id = uuid.uuid4().hex
        snapshot = store.snapshot()
        provisional = BugReport(
            id=request_id,
            headline=fields["headline"],
            description=fields["description"],
            project=fields["project"],
            product=fields["product"],
            component=fields["component"],
            created_at=datetime.now(timezone.utc),
        )
        candidates = candidate_set(provisional, snapshot)
        model_version = ""
        ranked = []
        if candidates:
            texts = [provisional.text()] + [c.text() for c in candidates]
            try:
                embed_resp = await embed_client.post(
                    "/api/v1/embed", json={"texts": texts}
                )
            except httpx.HTTPError as exc:
                return _unavailable("embedding server", str(exc))
            if embed_resp.status_code != 200:
                return _unavailable(
                    "embedding server", f"status {embed_resp.status_code}"
                )
            body = embed_resp.json()
            vectors = [np.asarray(v, dtype=np.float64) for v in body["vectors"]]
            hits = body["hits"]

            new_doc = prepare_text(
                fields["headline"], fields["description"], cfg, None, lexicon
            )
            new_doc.embedding = DocEmbedding(
                vector=vectors[0], n_tokens_hit=int(hits[0])
            )
            rows = []
            for cand, vec, hit in zip(candidates, vectors[1:], hits[1:]):
                cand_doc = prepare_text(
                    cand.headline, cand.description, cfg, None, lexicon
                )
                cand_doc.embedding = DocEmbedding(
                    vector=vec, n_tokens_hit=int(hit)
                )
                rows.append(
                    [float(v) for v in pair_features(new_doc, cand_doc).values]
                )
            try:
                predict_resp = await model_client.post(
                    "/api/v1/predict",
                    json={"rows": rows, "schema_hash": FEATURE_SCHEMA.hash()},
                )
            except httpx.HTTPError as exc:
                return _unavailable("model server", str(exc))
            if predict_resp.status_code != 200:
                return _unavailable(
                    "model server", f"status {predict_resp.status_code}"
                )
            predict_body = predict_resp.json()
            probs = predict_body["probs"]
            model_version = predict_body.get("model_version", "")
            scored = list(zip(candidates, probs))
            scored.sort(key=lambda item: item[0].id)
            scored.sort(key=lambda item: item[0].created_at, reverse=True)
            scored.sort(key=lambda item: item[1], reverse=True)
            ranked = [
                {
                    "bug_id": cand.id,
                    "probability": float(prob),
                    "headline": cand.headline,
                }
                for cand, prob in scored[:top_k]
            ]
        cache.put(
            request_id,
            _CacheEntry(
                expires_at=time.monotonic() + ttl_seconds,
                provisional=provisional,
                candidate_ids=[c["bug_id"] for c in ranked],
            ),
        )
        return {
            "candidates": ranked,
            "model_version": model_version,
            "request_id": request_id,
        }

    @app.post("/api/v1/decision")
    def decide(payload: dict):
        request_id = payload.get("request_id")
        action = payload.get("action")
        target_id = payload.get("target_id")
        if not request_id or action not in ("create_new", "duplicate_of"):
            return JSONResponse(
                status_code=400,
                content={"detail": "decision needs request_id and a valid action"},
            )
        if (action == "duplicate_of") != (target_id is not None):
            return JSONResponse(
                status_code=422,
                content={
                    "detail": "duplicate_of requires target_id; create_new forbids it"
                },
            )
        entry = cache.pop(str(request_id))
        if entry is None:
            return JSONResponse(
                status_code=404,
                content={"detail": f"unknown or expired request_id {request_id}"},
            )
        snapshot = store.snapshot()
        if action == "duplicate_of" and str(target_id) not in snapshot:
            cache.put(str(request_id), entry)  # decision can be retried
            return JSONResponse(
                status_code=422,
                content={"detail": f"duplicate target {target_id} does not exist"},
            )
        provisional = entry.provisional
        stored = BugReport(
            id=store.next_web_id(),
            headline=provisional.headline,
            description=provisional.description,
            project=provisional.project,
            product=provisional.product,
            component=provisional.component,
            severity=provisional.severity,
            status=Status.DUPLICATE if action == "duplicate_of" else Status.NEW,
            duplicate_of=str(target_id) if action == "duplicate_of" else None,
            created_at=provisional.created_at,
        )
        store.add(stored)
        return bug_to_record(stored)

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
