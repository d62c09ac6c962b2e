"""Deterministic text normalization for bug-report text.

Fixed pipeline order: lowercase -> network addresses to the token `address`
-> file paths to the token `filepath` -> strip non-ASCII -> tokenize ->
stopword removal -> synonym mapping -> Porter stemming. Address/path
replacement runs before tokenization because punctuation-based splitting
would destroy those patterns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .porter import porter_stem

ADDRESS_TOKEN = "address"
FILEPATH_TOKEN = "filepath"

_HEX = "[0-9a-f]"

# IPv4: four dot-separated 1-3 digit groups, not embedded in a longer
# dotted/numeric run.
_IPV4_RE = re.compile(r"(?<![\d.])(?:\d{1,3}\.){3}\d{1,3}(?![\d.])")

# MAC: six hex pairs separated by ':' or '-'.
_MAC_RE = re.compile(
    rf"(?<![0-9a-f:-])(?:{_HEX}{{2}}[:-]){{5}}{_HEX}{{2}}(?![0-9a-f:-])"
)

# IPv6: >= 2 colon-separated hex groups, or any '::'-compressed form with at
# least one group.
_IPV6_RE = re.compile(
    r"(?<![0-9a-f:.])"
    r"(?:"
    rf"(?:{_HEX}{{1,4}}:){{1,7}}{_HEX}{{1,4}}"
    rf"|{_HEX}{{1,4}}(?::{_HEX}{{1,4}})*::(?:{_HEX}{{1,4}}(?::{_HEX}{{1,4}})*)?"
    rf"|::{_HEX}{{1,4}}(?::{_HEX}{{1,4}})*"
    r")"
    r"(?![0-9a-f:])"
)

# Path segments may contain dots but must not end in sentence punctuation,
# so "/var/log/syslog." leaves the final period for sentence counting.
_SEG = r"[^\s/\\]*[^\s/\\.!?,;:]"
_UNIX_PATH_RE = re.compile(rf"(?<!\S)/{_SEG}(?:/{_SEG})+")
_WIN_PATH_RE = re.compile(rf"(?<!\S)[a-z]:\\{_SEG}(?:\\{_SEG})*")

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


@dataclass(frozen=True)
class CleanConfig:
    """Stopword, synonym, and token-length settings for normalization."""

    stopwords: frozenset[str] = frozenset()
    synonyms: dict[str, str] = field(default_factory=dict)
    min_token_len: int = 1


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple[str, ...]
    source_char_len: int


def replace_addresses(s: str) -> str:
    """Replace IPv4/IPv6/MAC addresses in lowercase text with `address`."""
    s = _IPV4_RE.sub(ADDRESS_TOKEN, s)
    s = _MAC_RE.sub(ADDRESS_TOKEN, s)
    s = _IPV6_RE.sub(ADDRESS_TOKEN, s)
    return s


def replace_filepaths(s: str) -> str:
    """Replace Unix (>= 2 segments) and Windows drive paths with `filepath`."""
    s = _UNIX_PATH_RE.sub(FILEPATH_TOKEN, s)
    s = _WIN_PATH_RE.sub(FILEPATH_TOKEN, s)
    return s


def clean_text(raw: str) -> str:
    """Lowercase, replace addresses and paths, and strip non-ASCII chars."""
    s = raw.lower()
    s = replace_addresses(s)
    s = replace_filepaths(s)
    return s.encode("ascii", "ignore").decode("ascii")


def surface_tokens(raw: str, min_token_len: int = 1) -> tuple[str, ...]:
    """Tokens after cleaning but before stopword/synonym/stemming steps.

    Phrase counting needs these surface forms: stemming destroys the
    suffixes the part-of-speech heuristics key on.
    """
    cleaned = clean_text(raw)
    return tuple(
        t for t in _TOKEN_RE.findall(cleaned) if len(t) >= min_token_len
    )


def stem(token: str) -> str:
    return porter_stem(token)


def _stem_fixed(token: str) -> str:
    # A single Porter pass is not idempotent (e.g. "onse" -> "ons" -> "on");
    # stem to the fixed point. Terminates: output length never grows and the
    # only equal-length rewrite (y -> i) cannot reverse.
    while True:
        stemmed = porter_stem(token)
        if stemmed == token:
            return stemmed
        token = stemmed


_MAX_TOKEN_PASSES = 8


def _settle_token(token: str, cfg: CleanConfig) -> str | None:
    """Steps 6-8 (stopword, synonym, stem) iterated per token to a fixed point.

    A stem can land back in the stopword set or on a synonym key; iterating
    keeps normalize idempotent. The cap guards pathological synonym maps.
    """
    for _ in range(_MAX_TOKEN_PASSES):
        if token in cfg.stopwords:
            return None
        stemmed = _stem_fixed(cfg.synonyms.get(token, token))
        if stemmed == token:
            return token
        token = stemmed
    return token


def normalize(raw: str, cfg: CleanConfig) -> TokenizedText:
    """Run the full pipeline; never fails, empty input yields empty tokens."""
    cleaned = clean_text(raw)
    settled = []
    for token in _TOKEN_RE.findall(cleaned):
        if len(token) < cfg.min_token_len:
            continue
        final = _settle_token(token, cfg)
        if final is not None:
            settled.append(final)
    return TokenizedText(tokens=tuple(settled), source_char_len=len(cleaned))


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One token per line, UTF-8; blank lines ignored."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word:
            words.append(word)
    return frozenset(words)


def load_synonyms(path: str | Path) -> dict[str, str]:
    """`from<TAB>to` per line; blank lines ignored."""
    mapping: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        src, dst = line.split("\t", 1)
        mapping[src.strip()] = dst.strip()
    return mapping


def _data_file(name: str):
    return resources.files("bugdedup").joinpath("data").joinpath(name)


def default_stopwords() -> frozenset[str]:
    text = _data_file("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w for w in text.splitlines() if w.strip())


def sample_synonyms() -> dict[str, str]:
    mapping: dict[str, str] = {}
    for line in _data_file("synonyms.tsv").read_text(encoding="utf-8").splitlines():
        if line.strip():
            src, dst = line.split("\t", 1)
            mapping[src.strip()] = dst.strip()
    return mapping


def default_config() -> CleanConfig:
    """Shipped stopword list, empty synonym map."""
    return CleanConfig(stopwords=default_stopwords())
