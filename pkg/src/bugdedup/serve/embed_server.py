"""Embedding server: normalized mean-pooled vectors for raw text, on demand.

Kept separate from the app/model servers so those can restart without
reloading the (large) vector store.
"""

from __future__ import annotations

import os
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .. import __version__
from ..embedding import WordVectorStore, embed_document
from ..preprocess import CleanConfig, normalize


class EmbedRequest(BaseModel):
    texts: list[str]


def build_embed_app(
    store: WordVectorStore | None, cfg: CleanConfig
) -> FastAPI:
    app = FastAPI(title="bugdedup embedding server")
    app.state.store = store
    app.state.cfg = cfg
    app.state.embed_calls = 0

    @app.get("/healthz")
    def healthz():
        loaded = app.state.store is not None
        return {
            "status": "ok" if loaded else "degraded",
            "component": "embed-server",
            "version": __version__,
            "pid": os.getpid(),
            "store_loaded": loaded,
            "dim": app.state.store.dim if loaded else None,
            "vocab_size": app.state.store.vocab_size if loaded else None,
            "embed_calls": app.state.embed_calls,
        }

    @app.post("/api/v1/embed")
    def embed(request: EmbedRequest):
        current: WordVectorStore | None = app.state.store
        if current is None:
            return JSONResponse(
                status_code=503, content={"detail": "vector store not loaded"}
            )
        vectors = []
        hits = []
        for text in request.texts:
            doc = embed_document(normalize(text, app.state.cfg).tokens, current)
            vectors.append([float(v) for v in doc.vector])
            hits.append(doc.n_tokens_hit)
        app.state.embed_calls += len(request.texts)
        return {"vectors": vectors, "hits": hits}

    return app
