"""Build servers from a ServeConfig and run them under uvicorn."""

from __future__ import annotations

import threading

import uvicorn
from fastapi import FastAPI

from ..corpus import Corpus, load_jsonl
from ..embedding import load_vec_file
from ..features import default_pos_lexicon, load_pos_lexicon
from ..preprocess import CleanConfig, default_config, load_stopwords, load_synonyms
from .app_server import build_app_server
from .config import ServeConfig
from .embed_server import build_embed_app
from .model_server import ModelHolder, build_model_app


def text_config(config: ServeConfig) -> CleanConfig:
    if config.text.stopwords:
        stopwords = load_stopwords(config.text.stopwords)
    else:
        stopwords = default_config().stopwords
    synonyms = (
        load_synonyms(config.text.synonyms) if config.text.synonyms else {}
    )
    return CleanConfig(stopwords=stopwords, synonyms=synonyms)


def build_app(role: str, config: ServeConfig) -> FastAPI:
    cfg = text_config(config)
    if role == "embed":
        store = None
        if config.embed.vectors:
            store = load_vec_file(config.embed.vectors).store
        return build_embed_app(store, cfg)
    if role == "model":
        if not config.model.model:
            raise ValueError("model server needs [model].model (a model file)")
        return build_model_app(ModelHolder(config.model.model))
    if role == "app":
        corpus = (
            load_jsonl(config.app.corpus).corpus
            if config.app.corpus
            else Corpus.from_bugs([])
        )
        lexicon = (
            load_pos_lexicon(config.text.pos_lexicon)
            if config.text.pos_lexicon
            else default_pos_lexicon()
        )
        return build_app_server(
            corpus=corpus,
            cfg=cfg,
            model_url=config.app.model_url,
            embed_url=config.app.embed_url,
            top_k=config.app.top_k,
            ttl_seconds=config.app.ttl_seconds,
            persist_path=config.app.corpus if config.app.persist else None,
            ui_dir=config.app.ui_dir or None,
        )
    raise ValueError(f"unknown server role {role!r}")


def _uvicorn_server(app: FastAPI, host: str, port: int) -> uvicorn.Server:
    return uvicorn.Server(
        uvicorn.Config(app, host=host, port=port, log_level="warning")
    )


def run_servers(role: str, config: ServeConfig) -> None:
    """Run one server (blocking), or all three in one process for `all`."""
    if role in ("embed", "model", "app"):
        section = getattr(config, "app" if role == "app" else role)
        _uvicorn_server(build_app(role, config), section.host, section.port).run()
        return
    if role != "all":
        raise ValueError(f"unknown server role {role!r}")
    servers = [
        _uvicorn_server(build_app("embed", config), config.embed.host, config.embed.port),
        _uvicorn_server(build_app("model", config), config.model.host, config.model.port),
        _uvicorn_server(build_app("app", config), config.app.host, config.app.port),
    ]
    threads = [
        threading.Thread(target=server.run, daemon=True) for server in servers[:-1]
    ]
    for thread in threads:
        thread.start()
    try:
        servers[-1].run()
    finally:
        for server in servers[:-1]:
            server.should_exit = True
        for thread in threads:
            thread.join(timeout=5)
