"""Model server: a purely numeric prediction endpoint with atomic hot reload.

The served model is an immutable snapshot; reload swaps the reference under
a lock, so in-flight requests finish on the model they started with and a
response is never mixed across versions.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .. import __version__
from ..gbdt import GBDTError, GBDTModel, load_model, predict_proba_batch


@dataclass
class _Snapshot:
    model: GBDTModel
    version: str


class ModelHolder:
    """Lock-guarded current-model reference with a reload generation counter."""

    def __init__(self, path: str | Path):
        self._lock = threading.Lock()
        self._path = Path(path)
        self._generation = 0
        self._snapshot = self._load(self._path)

    def _load(self, path: Path) -> _Snapshot:
        model = load_model(path)
        self._generation += 1
        version = f"{model.version}+r{self._generation}"
        return _Snapshot(model=model, version=version)

    def current(self) -> _Snapshot:
        with self._lock:
            return self._snapshot

    def reload(self, path: str | Path | None = None) -> _Snapshot:
        """Atomic swap; raises GBDTError (old model retained) on a bad file."""
        target = Path(path) if path else self._path
        snapshot = self._load(target)
        with self._lock:
            self._snapshot = snapshot
            self._path = target
        return snapshot


class PredictRequest(BaseModel):
    rows: list[list[float]]
    schema_hash: str | None = None


class ReloadRequest(BaseModel):
    path: str | None = None


def build_model_app(holder: ModelHolder) -> FastAPI:
    app = FastAPI(title="bugdedup model server")
    app.state.holder = holder

    @app.get("/healthz")
    def healthz():
        snapshot = holder.current()
        return {
            "status": "ok",
            "component": "model-server",
            "version": __version__,
            "pid": os.getpid(),
            "model_version": snapshot.version,
            "schema_hash": snapshot.model.schema_hash,
            "n_trees": len(snapshot.model.trees),
        }

    @app.post("/api/v1/predict")
    def predict(request: PredictRequest):
        snapshot = holder.current()
        model = snapshot.model
        if request.schema_hash is not None and request.schema_hash != model.schema_hash:
            return JSONResponse(
                status_code=422,
                content={
                    "detail": "feature schema mismatch",
                    "expected_schema_hash": model.schema_hash,
                    "got_schema_hash": request.schema_hash,
                },
            )
        if not request.rows:
            return {"probs": [], "model_version": snapshot.version}
        widths = {len(row) for row in request.rows}
        if len(widths) != 1:
            return JSONResponse(
                status_code=422,
                content={"detail": f"ragged feature rows: widths {sorted(widths)}"},
            )
        required = 0
        stack = list(model.trees)
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                required = max(required, node.feature_index + 1)
                stack.extend((node.left, node.right))
        if widths and max(widths) < required:
            return JSONResponse(
                status_code=422,
                content={
                    "detail": f"rows have {max(widths)} features, model needs "
                    f">= {required}",
                    "expected_schema_hash": model.schema_hash,
                },
            )
        X = np.asarray(request.rows, dtype=np.float64)
        if not np.all(np.isfinite(X)):
            return JSONResponse(
                status_code=422, content={"detail": "non-finite feature values"}
            )
        probs = predict_proba_batch(model, X)
        return {
            "probs": [float(p) for p in probs],
            "model_version": snapshot.version,
        }

    @app.post("/api/v1/reload")
    def reload(request: ReloadRequest):
        try:
            snapshot = holder.reload(request.path)
        except GBDTError as exc:
            return JSONResponse(
                status_code=400,
                content={
                    "detail": f"reload rejected: {exc}",
                    "model_version": holder.current().version,
                },
            )
        return {"model_version": snapshot.version}

    return app
