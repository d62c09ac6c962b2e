"""Pair feature vector: statistical, phrase-count, and embedding-distance families.

The schema is frozen (28 names, order below) and identical at train and
predict time; train/predict verify it by hash. Statistical and contextual
features use the fully normalized token stream; phrase counting uses the
surface (pre-stem, pre-stopword) stream because stemming destroys the
suffixes the tagger keys on.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import BugReport
from .embedding import DocEmbedding, WordVectorStore, embed_document
from .preprocess import CleanConfig, TokenizedText, clean_text, normalize, surface_tokens

FEATURE_NAMES = (
    "char_len_diff",
    "word_count_diff",
    "unique_word_diff",
    "sentences_a",
    "sentences_b",
    "syllables_a",
    "syllables_b",
    "chars_a",
    "chars_b",
    "common_word_count",
    "levenshtein",
    "skew_a",
    "skew_b",
    "kurtosis_a",
    "kurtosis_b",
    "np_a",
    "np_b",
    "vp_a",
    "vp_b",
    "np_diff",
    "vp_diff",
    "dist_euclidean",
    "dist_canberra",
    "dist_jaccard",
    "dist_cityblock",
    "dist_cosine",
    "dist_minkowski",
    "dist_braycurtis",
)

MINKOWSKI_P = 3


class FeatureError(Exception):
    """Fatal feature-schema problem, e.g. mismatched embedding dimensions."""


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise FeatureError("feature names must be unique")

    @property
    def length(self) -> int:
        return len(self.names)

    def hash(self) -> str:
        return hashlib.sha256(",".join(self.names).encode("utf-8")).hexdigest()


FEATURE_SCHEMA = FeatureSchema(names=FEATURE_NAMES)


@dataclass(frozen=True)
class PairFeatures:
    values: np.ndarray
    schema_hash: str = FEATURE_SCHEMA.hash()


@dataclass
class FeatureDiagnostics:
    """Counts non-finite intermediates replaced by zero."""

    nonfinite_count: int = 0


@dataclass(frozen=True)
class TextStats:
    char_len: int
    word_count: int
    unique_word_count: int
    sentence_count: int
    syllable_count: int
    word_len_skew: float
    word_len_kurtosis: float


_SENTENCE_SPLIT = re.compile(r"[.!?\n]+")
_VOWEL_RUN = re.compile(r"[aeiouy]+")


def syllable_count(token: str) -> int:
    """Maximal vowel-group runs, at least one per token."""
    return max(1, len(_VOWEL_RUN.findall(token)))


def _moments(values: list[int]) -> tuple[float, float]:
    """Sample skewness and excess kurtosis; zero for n < 3 or zero variance."""
    n = len(values)
    if n < 3:
        return 0.0, 0.0
    arr = np.asarray(values, dtype=np.float64)
    centered = arr - arr.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return 0.0, 0.0
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    return m3 / m2**1.5, m4 / m2**2 - 3.0


def text_stats(tokenized: TokenizedText, raw_clean: str) -> TextStats:
    """Counts and token-length moments; raw_clean is the pre-tokenization string."""
    tokens = tokenized.tokens
    sentences = [s for s in _SENTENCE_SPLIT.split(raw_clean) if s.strip()]
    lengths = [len(t) for t in tokens]
    skew, kurt = _moments(lengths)
    return TextStats(
        char_len=len(raw_clean),
        word_count=len(tokens),
        unique_word_count=len(set(tokens)),
        sentence_count=len(sentences),
        syllable_count=sum(syllable_count(t) for t in tokens),
        word_len_skew=skew,
        word_len_kurtosis=kurt,
    )


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over characters."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    if len(a) * len(b) <= 1024:
        return _levenshtein_small(a, b)
    b_codes = np.array([ord(c) for c in b], dtype=np.int64)
    width = len(b) + 1
    offsets = np.arange(width, dtype=np.int64)
    prev = offsets.copy()
    cur = np.empty(width, dtype=np.int64)
    for i, ch in enumerate(a, 1):
        cur[0] = i
        np.minimum(prev[:-1] + (b_codes != ord(ch)), prev[1:] + 1, out=cur[1:])
        # Resolve the in-row insertion recurrence exactly:
        # cur[j] = min over k <= j of cur[k] + (j - k).
        np.minimum(np.minimum.accumulate(cur - offsets) + offsets, cur, out=cur)
        prev, cur = cur, prev
    return int(prev[-1])


def _levenshtein_small(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(
                min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            )
        prev = cur
    return prev[-1]


def stat_features(
    stats_a: TextStats,
    joined_a: str,
    stats_b: TextStats,
    joined_b: str,
    common_tokens: int,
) -> list[float]:
    """The 15 statistical features, in schema order."""
    return [
        float(abs(stats_a.char_len - stats_b.char_len)),
        float(abs(stats_a.word_count - stats_b.word_count)),
        float(abs(stats_a.unique_word_count - stats_b.unique_word_count)),
        float(stats_a.sentence_count),
        float(stats_b.sentence_count),
        float(stats_a.syllable_count),
        float(stats_b.syllable_count),
        float(stats_a.char_len),
        float(stats_b.char_len),
        float(common_tokens),
        float(levenshtein(joined_a, joined_b)),
        stats_a.word_len_skew,
        stats_b.word_len_skew,
        stats_a.word_len_kurtosis,
        stats_b.word_len_kurtosis,
    ]


# --- Phrase counting -------------------------------------------------------

_POS_TAGS = ("DET", "ADJ", "NOUN", "VERB", "OTHER")
_TAG_LETTER = {"DET": "D", "ADJ": "A", "NOUN": "N", "VERB": "V", "OTHER": "O"}
_NP_RE = re.compile(r"D?A*N+")
_VP_RE = re.compile(r"V+")

_VERB_SUFFIXES = ("ing", "ed", "ize")
_NOUN_SUFFIXES = ("tion", "ness", "ment", "er")


class PosLexicon(dict):
    """word -> tag map for closed-class words."""


def load_pos_lexicon(path: str | Path) -> PosLexicon:
    lex = PosLexicon()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        word, tag = line.split("\t", 1)
        tag = tag.strip()
        if tag not in _POS_TAGS:
            raise FeatureError(f"unknown POS tag {tag!r} for {word!r}")
        lex[word.strip()] = tag
    return lex


def default_pos_lexicon() -> PosLexicon:
    ref = resources.files("bugdedup").joinpath("data").joinpath("pos_lexicon.tsv")
    lex = PosLexicon()
    for line in ref.read_text(encoding="utf-8").splitlines():
        if line.strip():
            word, tag = line.split("\t", 1)
            lex[word.strip()] = tag.strip()
    return lex


_DEFAULT_LEXICON: PosLexicon | None = None


def _lexicon() -> PosLexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = default_pos_lexicon()
    return _DEFAULT_LEXICON


def pos_tag(token: str, lexicon: PosLexicon | None = None) -> str:
    """Two-stage tagging: lexicon lookup, then suffix heuristics, default NOUN."""
    lex = lexicon if lexicon is not None else _lexicon()
    tag = lex.get(token)
    if tag is not None:
        return tag
    if token.endswith(_VERB_SUFFIXES):
        return "VERB"
    if token.endswith(_NOUN_SUFFIXES):
        return "NOUN"
    return "NOUN"


def phrase_counts(
    tokens: tuple[str, ...] | list[str], lexicon: PosLexicon | None = None
) -> tuple[int, int]:
    """Noun-phrase and verb-phrase counts over surface tokens.

    Noun phrases are maximal DET? ADJ* NOUN+ runs; verb phrases are maximal
    VERB+ runs.
    """
    tag_string = "".join(
        _TAG_LETTER[pos_tag(t, lexicon)] for t in tokens
    )
    return (
        len(_NP_RE.findall(tag_string)),
        len(_VP_RE.findall(tag_string)),
    )


def semantic_features(
    np_a: int, vp_a: int, np_b: int, vp_b: int
) -> list[float]:
    """The 6 phrase-count features, in schema order."""
    return [
        float(np_a),
        float(np_b),
        float(vp_a),
        float(vp_b),
        float(abs(np_a - np_b)),
        float(abs(vp_a - vp_b)),
    ]


# --- Embedding distances ---------------------------------------------------


def distance_features(va: DocEmbedding, vb: DocEmbedding) -> list[float]:
    """The 7 vector distances, in schema order, with zero-vector guards."""
    x = np.asarray(va.vector, dtype=np.float64)
    y = np.asarray(vb.vector, dtype=np.float64)
    if x.shape != y.shape:
        raise FeatureError(
            f"embedding dimension mismatch: {x.shape} vs {y.shape}"
        )
    if np.array_equal(x, y):
        return [0.0] * 7
    # Non-finite inputs propagate NaN/inf through here; pair_features maps
    # those to zero with a diagnostics count, so intermediate warnings are
    # suppressed rather than raised.
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        diff = np.abs(x - y)

        euclidean = float(np.sqrt(np.sum((x - y) ** 2)))

        denom = np.abs(x) + np.abs(y)
        mask = denom > 0
        canberra = float(np.sum(diff[mask] / denom[mask]))

        nonzero = (x != 0) | (y != 0)
        n_nonzero = int(np.count_nonzero(nonzero))
        if n_nonzero == 0:
            jaccard = 0.0
        else:
            disagree = int(np.count_nonzero((x != y) & nonzero))
            jaccard = disagree / n_nonzero

        cityblock = float(np.sum(diff))

        norm_x = float(np.linalg.norm(x))
        norm_y = float(np.linalg.norm(y))
        if norm_x == 0.0 and norm_y == 0.0:
            cosine = 0.0
        elif norm_x == 0.0 or norm_y == 0.0:
            cosine = 1.0  # differing vectors (both-zero handled above)
        else:
            # clamp away float wobble; the true range is [0, 2]
            cosine = 1.0 - float(np.dot(x, y)) / (norm_x * norm_y)
            cosine = min(max(cosine, 0.0), 2.0)

        minkowski = float(np.sum(diff**MINKOWSKI_P) ** (1.0 / MINKOWSKI_P))

        bc_denom = float(np.sum(np.abs(x + y)))
        braycurtis = float(np.sum(diff)) / bc_denom if bc_denom > 0 else 0.0

    return [euclidean, canberra, jaccard, cityblock, cosine, minkowski, braycurtis]


# --- Per-bug preparation and pair assembly ---------------------------------


@dataclass
class BugDoc:
    """Precomputed per-bug artifacts reused across pair featurizations."""

    tokens: TokenizedText
    joined: str
    stats: TextStats
    np_count: int
    vp_count: int
    embedding: DocEmbedding | None = None


def prepare_text(
    headline: str,
    description: str,
    cfg: CleanConfig,
    store: WordVectorStore | None = None,
    lexicon: PosLexicon | None = None,
) -> BugDoc:
    """Normalize one bug's text and compute all per-bug feature inputs."""
    raw = f"{headline} {description}".strip()
    tokenized = normalize(raw, cfg)
    cleaned = clean_text(raw)
    stats = text_stats(tokenized, cleaned)
    np_count, vp_count = phrase_counts(
        surface_tokens(raw, cfg.min_token_len), lexicon
    )
    embedding = None
    if store is not None:
        embedding = embed_document(tokenized.tokens, store)
    return BugDoc(
        tokens=tokenized,
        joined=" ".join(tokenized.tokens),
        stats=stats,
        np_count=np_count,
        vp_count=vp_count,
        embedding=embedding,
    )


def prepare_bug(
    bug: BugReport,
    cfg: CleanConfig,
    store: WordVectorStore | None = None,
    lexicon: PosLexicon | None = None,
) -> BugDoc:
    return prepare_text(bug.headline, bug.description, cfg, store, lexicon)


def pair_features(
    doc_a: BugDoc,
    doc_b: BugDoc,
    diagnostics: FeatureDiagnostics | None = None,
) -> PairFeatures:
    """Assemble the frozen 28-value vector from two prepared docs."""
    if doc_a.embedding is None or doc_b.embedding is None:
        raise FeatureError("both docs need embeddings before featurization")
    common = len(set(doc_a.tokens.tokens) & set(doc_b.tokens.tokens))
    values = (
        stat_features(doc_a.stats, doc_a.joined, doc_b.stats, doc_b.joined, common)
        + semantic_features(
            doc_a.np_count, doc_a.vp_count, doc_b.np_count, doc_b.vp_count
        )
        + distance_features(doc_a.embedding, doc_b.embedding)
    )
    arr = np.asarray(values, dtype=np.float64)
    bad = ~np.isfinite(arr)
    if bad.any():
        if diagnostics is not None:
            diagnostics.nonfinite_count += int(bad.sum())
        arr = np.where(bad, 0.0, arr)
    return PairFeatures(values=arr)


def build_feature_vector(
    bug_a: BugReport,
    bug_b: BugReport,
    store: WordVectorStore,
    cfg: CleanConfig,
    lexicon: PosLexicon | None = None,
    diagnostics: FeatureDiagnostics | None = None,
) -> PairFeatures:
    """Featurize one (bug, bug) pair from scratch."""
    doc_a = prepare_bug(bug_a, cfg, store, lexicon)
    doc_b = prepare_bug(bug_b, cfg, store, lexicon)
    return pair_features(doc_a, doc_b, diagnostics)


def save_feature_csv(
    X: np.ndarray,
    y,
    path: str | Path,
    schema: FeatureSchema = FEATURE_SCHEMA,
) -> None:
    """Feature-matrix export: header = schema names + label, full precision."""
    import csv

    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != schema.length:
        raise FeatureError(
            f"matrix width {X.shape} does not match schema length {schema.length}"
        )
    if X.shape[0] != len(y):
        raise FeatureError("feature matrix and labels differ in length")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(schema.names) + ["label"])
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
