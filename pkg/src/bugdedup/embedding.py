"""Pretrained word vectors and mean-pooled document embeddings.

Loads the standard text vector format (header `count dim`, then one
`word v1 .. vdim` line each). The store is immutable after loading and
shared read-only; embedding is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

EXPECTED_DIM = 300


class VecFormatError(Exception):
    """Malformed vector file header or unreadable file."""


@dataclass(frozen=True)
class WordVectorStore:
    dim: int
    vectors: Mapping[str, np.ndarray]

    @property
    def vocab_size(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors


@dataclass(frozen=True)
class DocEmbedding:
    vector: np.ndarray
    n_tokens_hit: int


@dataclass(frozen=True)
class VecLoadResult:
    store: WordVectorStore
    skipped_lines: int


def load_vec_file(path: str | Path) -> VecLoadResult:
    """Read a text vector file; lines with the wrong float count are skipped.

    Later duplicate words overwrite earlier ones. At most `count` (from the
    header) vector lines are consumed.
    """
    path = Path(path)
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise VecFormatError(f"cannot read vector file {path}: {exc}") from exc
    with fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise VecFormatError(f"{path}: header must be '<count> <dim>'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise VecFormatError(f"{path}: non-integer header") from exc
        if count < 0 or dim < 1:
            raise VecFormatError(f"{path}: bad header values {count} {dim}")
        vectors: dict[str, np.ndarray] = {}
        skipped = 0
        read = 0
        for line in fh:
            if read >= count:
                break
            if not line.strip():
                continue
            read += 1
            parts = line.rstrip("\n").split(" ")
            word, values = parts[0], parts[1:]
            if values and values[-1] == "":
                values = values[:-1]
            if len(values) != dim:
                skipped += 1
                continue
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError:
                skipped += 1
                continue
            if not np.all(np.isfinite(vec)):
                skipped += 1
                continue
            vectors[word] = vec
    store = WordVectorStore(dim=dim, vectors=vectors)
    return VecLoadResult(store=store, skipped_lines=skipped)


def embed_document(tokens: Iterable[str], store: WordVectorStore) -> DocEmbedding:
    """Component-wise mean of in-vocabulary token vectors.

    Out-of-vocabulary tokens are skipped; with no hits the embedding is the
    zero vector and n_tokens_hit is 0.
    """
    hits = [store.vectors[t] for t in tokens if t in store.vectors]
    if not hits:
        return DocEmbedding(
            vector=np.zeros(store.dim, dtype=np.float64), n_tokens_hit=0
        )
    return DocEmbedding(
        vector=np.mean(hits, axis=0), n_tokens_hit=len(hits)
    )


def save_vec_file(store: WordVectorStore, path: str | Path) -> None:
    """Write the store back out in the text vector format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{store.vocab_size} {store.dim}\n")
        for word, vec in store.vectors.items():
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")
