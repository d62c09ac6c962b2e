"""Bug-report data model, ingestion, validity filtering, and clustering.

A Corpus is immutable after construction and safe to share across readers.
The JSONL format is one object per line with the fixed key set; absent
optional fields serialize as null.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import requests

from .preprocess import clean_text

JSONL_FIELDS = (
    "id",
    "headline",
    "description",
    "project",
    "product",
    "component",
    "version",
    "hardware",
    "severity",
    "status",
    "duplicate_of",
    "created_at",
)

MIN_DESCRIPTION_CHARS = 20


class CorpusError(Exception):
    """Fatal corpus problem: unreadable file, duplicate id, bad record."""


class IngestError(Exception):
    """Retriable ingestion failure; carries the page offset to resume from."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class Severity(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"
    VERY_LOW = "very_low"
    UNKNOWN = "unknown"


class Status(str, Enum):
    NEW = "new"
    ASSIGNED = "assigned"
    DUPLICATE = "duplicate"
    RESOLVED = "resolved"
    CLOSED = "closed"


@dataclass(frozen=True)
class BugReport:
    id: str
    headline: str = ""
    description: str = ""
    project: str = ""
    product: str = ""
    component: str = ""
    version: str = ""
    hardware: str = ""
    severity: Severity = Severity.UNKNOWN
    status: Status = Status.NEW
    duplicate_of: str | None = None
    created_at: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("bug id must be non-empty")
        if (self.status == Status.DUPLICATE) != (self.duplicate_of is not None):
            raise CorpusError(
                f"bug {self.id}: status 'duplicate' and duplicate_of must "
                "be present together"
            )
        if self.duplicate_of == self.id:
            raise CorpusError(f"bug {self.id}: duplicate_of itself")

    def text(self) -> str:
        return f"{self.headline} {self.description}".strip()


@dataclass(frozen=True)
class Corpus:
    bugs: tuple[BugReport, ...]
    index: dict[str, int]

    @classmethod
    def from_bugs(cls, bugs: Iterable[BugReport]) -> "Corpus":
        bug_tuple = tuple(bugs)
        index: dict[str, int] = {}
        for pos, bug in enumerate(bug_tuple):
            if bug.id in index:
                raise CorpusError(f"duplicate bug id {bug.id!r}")
            index[bug.id] = pos
        return cls(bugs=bug_tuple, index=index)

    def __len__(self) -> int:
        return len(self.bugs)

    def __iter__(self) -> Iterator[BugReport]:
        return iter(self.bugs)

    def __contains__(self, bug_id: str) -> bool:
        return bug_id in self.index

    def get(self, bug_id: str) -> BugReport:
        try:
            return self.bugs[self.index[bug_id]]
        except KeyError:
            raise CorpusError(f"unknown bug id {bug_id!r}") from None

    def with_bug(self, bug: BugReport) -> "Corpus":
        """New corpus with one bug appended; the original is untouched."""
        if bug.id in self.index:
            raise CorpusError(f"duplicate bug id {bug.id!r}")
        new_index = dict(self.index)
        new_index[bug.id] = len(self.bugs)
        return Corpus(bugs=self.bugs + (bug,), index=new_index)


@dataclass(frozen=True)
class DuplicateClusters:
    cluster_of: dict[str, str]
    clusters: dict[str, frozenset[str]]

    def same_cluster(self, id_a: str, id_b: str) -> bool:
        ca = self.cluster_of.get(id_a)
        return ca is not None and ca == self.cluster_of.get(id_b)


@dataclass
class SkipReport:
    """Counts records dropped during a load, with per-reason tallies."""

    skipped: int = 0
    reasons: dict[str, int] | None = None

    def add(self, reason: str) -> None:
        self.skipped += 1
        if self.reasons is None:
            self.reasons = {}
        self.reasons[reason] = self.reasons.get(reason, 0) + 1


@dataclass(frozen=True)
class LoadResult:
    corpus: Corpus
    skip_report: SkipReport


@dataclass(frozen=True)
class FilterResult:
    corpus: Corpus
    removed_empty: int
    removed_short: int

    @property
    def removed(self) -> int:
        return self.removed_empty + self.removed_short


def _parse_created_at(value) -> datetime:
    if value is None:
        return datetime(1970, 1, 1, tzinfo=timezone.utc)
    if isinstance(value, datetime):
        dt = value
    else:
        text = str(value)
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _format_created_at(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_severity(value) -> Severity:
    if value is None:
        return Severity.UNKNOWN
    text = str(value).strip().lower().replace(" ", "_").replace("-", "_")
    try:
        return Severity(text)
    except ValueError:
        return Severity.UNKNOWN


def bug_from_record(record: dict) -> BugReport:
    """Build a BugReport from a JSONL-shaped dict; raises CorpusError."""
    if not isinstance(record, dict):
        raise CorpusError("record is not an object")
    bug_id = record.get("id")
    if bug_id is None or str(bug_id) == "":
        raise CorpusError("record missing id")
    duplicate_of = record.get("duplicate_of")
    duplicate_of = None if duplicate_of in (None, "") else str(duplicate_of)
    status_raw = str(record.get("status") or "new").strip().lower()
    try:
        status = Status(status_raw)
    except ValueError:
        raise CorpusError(f"bug {bug_id}: unknown status {status_raw!r}")
    return BugReport(
        id=str(bug_id),
        headline=str(record.get("headline") or ""),
        description=str(record.get("description") or ""),
        project=str(record.get("project") or ""),
        product=str(record.get("product") or ""),
        component=str(record.get("component") or ""),
        version=str(record.get("version") or ""),
        hardware=str(record.get("hardware") or ""),
        severity=parse_severity(record.get("severity")),
        status=status,
        duplicate_of=duplicate_of,
        created_at=_parse_created_at(record.get("created_at")),
    )


def bug_to_record(bug: BugReport) -> dict:
    return {
        "id": bug.id,
        "headline": bug.headline,
        "description": bug.description,
        "project": bug.project,
        "product": bug.product,
        "component": bug.component,
        "version": bug.version,
        "hardware": bug.hardware,
        "severity": bug.severity.value,
        "status": bug.status.value,
        "duplicate_of": bug.duplicate_of,
        "created_at": _format_created_at(bug.created_at),
    }


def load_jsonl(path: str | Path) -> LoadResult:
    """Load a corpus file, skipping schema-invalid lines with a count.

    Duplicate ids are fatal; an unreadable file is fatal.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    skip = SkipReport()
    bugs: list[BugReport] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            skip.add("bad_json")
            continue
        try:
            bug = bug_from_record(record)
        except CorpusError:
            skip.add("invalid_record")
            continue
        if bug.id in seen:
            raise CorpusError(
                f"duplicate bug id {bug.id!r} at line {lineno} of {path}"
            )
        seen.add(bug.id)
        bugs.append(bug)
    return LoadResult(corpus=Corpus.from_bugs(bugs), skip_report=skip)


def save_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus; round-trips bit-exactly through load_jsonl."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            for bug in corpus:
                fh.write(json.dumps(bug_to_record(bug), ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        raise CorpusError(f"cannot write corpus file {path}: {exc}") from exc


def filter_invalid(corpus: Corpus) -> FilterResult:
    """Drop bugs with no text at all, and bugs with a short cleaned description.

    "Short" means the cleaned description (lowercased, addresses/paths
    replaced, non-ASCII stripped) has fewer than MIN_DESCRIPTION_CHARS
    characters. Returns a new corpus; the input is untouched.
    """
    kept: list[BugReport] = []
    removed_empty = 0
    removed_short = 0
    for bug in corpus:
        if not bug.headline.strip() and not bug.description.strip():
            removed_empty += 1
            continue
        if len(clean_text(bug.description)) < MIN_DESCRIPTION_CHARS:
            removed_short += 1
            continue
        kept.append(bug)
    return FilterResult(
        corpus=Corpus.from_bugs(kept),
        removed_empty=removed_empty,
        removed_short=removed_short,
    )


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def duplicate_clusters(corpus: Corpus) -> DuplicateClusters:
    """Transitive, symmetric closure of duplicate_of links.

    Links to targets missing from the corpus are dropped; a cluster is
    emitted only when it contains at least two bugs present in the corpus.
    """
    uf = _UnionFind()
    for bug in corpus:
        if bug.duplicate_of is not None and bug.duplicate_of in corpus:
            uf.union(bug.id, bug.duplicate_of)
    members: dict[str, set[str]] = {}
    for bug in corpus:
        if bug.id in uf.parent:
            members.setdefault(uf.find(bug.id), set()).add(bug.id)
    cluster_of: dict[str, str] = {}
    clusters: dict[str, frozenset[str]] = {}
    for ids in members.values():
        if len(ids) < 2:
            continue
        cid = min(ids)
        clusters[cid] = frozenset(ids)
        for bug_id in ids:
            cluster_of[bug_id] = cid
    return DuplicateClusters(cluster_of=cluster_of, clusters=clusters)


# Remote (Bugzilla-style) status values mapped onto the tracked enum.
_REMOTE_STATUS = {
    "new": Status.NEW,
    "unconfirmed": Status.NEW,
    "confirmed": Status.NEW,
    "reopened": Status.NEW,
    "assigned": Status.ASSIGNED,
    "in_progress": Status.ASSIGNED,
    "resolved": Status.RESOLVED,
    "verified": Status.RESOLVED,
    "closed": Status.CLOSED,
    "duplicate": Status.DUPLICATE,
}


def _bug_from_remote(record: dict) -> BugReport:
    if record.get("id") in (None, ""):
        raise CorpusError("remote record missing id")
    bug_id = str(record["id"])
    description = record.get("description")
    if description is None:
        comments = record.get("comments")
        if isinstance(comments, list) and comments:
            first = comments[0]
            description = first.get("text") if isinstance(first, dict) else first
    dupe_of = record.get("dupe_of")
    dupe_of = None if dupe_of in (None, "") else str(dupe_of)
    status = _REMOTE_STATUS.get(
        str(record.get("status") or "new").strip().lower(), Status.NEW
    )
    if dupe_of is not None:
        status = Status.DUPLICATE
    elif status == Status.DUPLICATE:
        # Remote claims duplicate but gives no target; demote rather than
        # fabricate a link.
        status = Status.RESOLVED
    return BugReport(
        id=bug_id,
        headline=str(record.get("summary") or record.get("headline") or ""),
        description=str(description or ""),
        project=str(record.get("project") or record.get("classification") or ""),
        product=str(record.get("product") or ""),
        component=str(record.get("component") or ""),
        version=str(record.get("version") or ""),
        hardware=str(record.get("hardware") or record.get("platform") or ""),
        severity=parse_severity(record.get("severity")),
        status=status,
        duplicate_of=dupe_of,
        created_at=_parse_created_at(
            record.get("creation_time") or record.get("created_at")
        ),
    )


def ingest_rest(
    endpoint_url: str,
    query: dict[str, str] | None = None,
    page_size: int = 500,
    max_bugs: int = 10000,
    token: str | None = None,
    timeout: float = 60.0,
) -> LoadResult:
    """Page through a REST endpoint with limit/offset, mapping to BugReports.

    The response is expected to be JSON with a `bugs` array. Records missing
    an id are skipped and counted; a network failure raises IngestError
    carrying the offset of the failed page.
    """
    if page_size < 1:
        raise ValueError("page_size must be >= 1")
    if max_bugs < 1:
        raise ValueError("max_bugs must be >= 1")
    headers = {}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    skip = SkipReport()
    bugs: list[BugReport] = []
    seen: set[str] = set()
    offset = 0
    while len(bugs) < max_bugs:
        params = dict(query or {})
        params["limit"] = str(min(page_size, max_bugs - len(bugs)))
        params["offset"] = str(offset)
        try:
            response = requests.get(
                endpoint_url, params=params, headers=headers, timeout=timeout
            )
            response.raise_for_status()
            payload = response.json()
        except (requests.RequestException, ValueError) as exc:
            raise IngestError(
                f"page fetch failed at offset {offset}: {exc}", offset=offset
            ) from exc
        records = payload.get("bugs") if isinstance(payload, dict) else None
        if not records:
            break
        for record in records:
            if len(bugs) >= max_bugs:
                break
            try:
                bug = _bug_from_remote(record)
            except CorpusError:
                skip.add("missing_id")
                continue
            if bug.id in seen:
                skip.add("duplicate_id")
                continue
            seen.add(bug.id)
            bugs.append(bug)
        offset += len(records)
        if len(records) < page_size:
            break
    return LoadResult(corpus=Corpus.from_bugs(bugs), skip_report=skip)
