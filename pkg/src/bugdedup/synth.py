"""Seeded synthetic bug corpus with paraphrase-style duplicate clusters.

Generates bugs from fixed templates spread over product x component cells.
Cluster members describe the same incident with rotated synonyms, shuffled
sentence frames, and injected address/path noise; a matching word-vector
store places synonyms near each other so the contextual features carry
signal, mirroring what pretrained vectors provide on real text.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import BugReport, Corpus, Severity, Status
from .embedding import WordVectorStore, save_vec_file
from .preprocess import default_config, normalize

CELLS = (
    ("router-os", "routing"),
    ("router-os", "firmware"),
    ("switch-os", "vlan"),
    ("nms", "dashboard"),
    ("nms", "alerts"),
)

# Interchangeable word groups; members of one family get nearby vectors.
FAMILIES = (
    ("crashes", "fails", "aborts"),
    ("restarting", "rebooting", "relaunching"),
    ("reload", "refresh"),
    ("config", "configuration", "settings"),
    ("error", "fault", "failure"),
    ("slow", "sluggish", "laggy"),
    ("timeout", "stall"),
    ("traffic", "load"),
    ("session", "connection"),
    ("expires", "drops", "disconnects"),
    ("update", "upgrade", "patch"),
    ("display", "render", "draw"),
    ("freezes", "locks", "stalls"),
    ("corrupted", "garbled", "mangled"),
    ("missing", "absent", "lost"),
    ("peer", "neighbor"),
    ("spikes", "surges"),
    ("silently", "quietly"),
    ("intermittently", "sporadically", "occasionally"),
    ("incorrect", "wrong", "bogus"),
)

_SUBJECTS = {
    ("router-os", "routing"): (
        "bgp daemon", "ospf process", "route cache", "nexthop resolver",
        "rib walker", "policy engine", "prefix filter", "path selector",
    ),
    ("router-os", "firmware"): (
        "boot loader", "image installer", "license manager", "watchdog timer",
        "flash driver", "env monitor", "fan controller", "power sequencer",
    ),
    ("switch-os", "vlan"): (
        "vlan mapper", "trunk negotiator", "stp bridge", "mac learner",
        "igmp snooper", "port mirror", "lacp bundler", "storm limiter",
    ),
    ("nms", "dashboard"): (
        "topology view", "metric panel", "inventory grid", "search bar",
        "report builder", "login page", "widget store", "theme switcher",
    ),
    ("nms", "alerts"): (
        "alert router", "mail notifier", "webhook sender", "dedup window",
        "severity mapper", "silence rule", "escalation chain", "digest composer",
    ),
}

_CONTEXTS = (
    (3, 2),   # config reload
    (7, 1),   # traffic restarting? (traffic, restarting) — reads as noise words
    (8, 9),   # session expires
    (10, 0),  # update crashes
    (7, 16),  # traffic spikes
    (8, 6),   # session timeout
    (3, 10),  # config update
    (10, 6),  # update timeout
)

_HEADLINE_FRAMES = (
    "{subject} {action} when {ctx_a} {ctx_b}",
    "{subject} {action} after {ctx_a} {ctx_b}",
    "{fault} in {subject} during {ctx_a} {ctx_b}",
    "{subject} {action} once {ctx_a} {ctx_b}",
)

_DESC_FRAMES = (
    "The {subject} {action} whenever the {ctx_a} {ctx_b}. Code {code} is "
    "logged by the {module} module.{noise} {filler}",
    "After the {ctx_a} {ctx_b}, the {subject} suddenly {action}. We keep "
    "seeing {code} from {module} in the logs.{noise} {filler}",
    "{filler} Since the {ctx_a} {ctx_b} the {subject} {action} and reports "
    "{code}. The {module} module looks responsible.{noise}",
)

_FILLERS = (
    "This happens every single time.",
    "Issue is reproducible on the lab setup.",
    "Seen again after the latest nightly build.",
    "Customers already noticed the problem twice.",
    "The workaround of toggling the feature no longer helps.",
)

_MODULES = (
    "kernel", "parser", "scheduler", "collector", "encoder", "dispatcher",
    "resolver", "archiver", "notifier", "planner", "indexer", "prober",
)

_STATUSES = (Status.NEW, Status.ASSIGNED, Status.RESOLVED, Status.CLOSED)
_SEVERITIES = (Severity.HIGH, Severity.MEDIUM, Severity.LOW, Severity.VERY_LOW)

EMBED_DIM = 300


@dataclass(frozen=True)
class SynthCorpus:
    corpus: Corpus
    store: WordVectorStore
    n_clusters: int
    n_invalid: int


def _family_pick(rng: np.random.Generator, family_idx: int) -> str:
    members = FAMILIES[family_idx]
    return members[int(rng.integers(len(members)))]


def _random_address(rng: np.random.Generator) -> str:
    return ".".join(str(int(rng.integers(1, 255))) for _ in range(4))


def _random_path(rng: np.random.Generator) -> str:
    parts = ["var", "opt", "srv"], ["log", "run", "lib"], ["agent", "core", "net"]
    return "/" + "/".join(p[int(rng.integers(len(p)))] for p in parts) + ".log"


def _noise(rng: np.random.Generator) -> str:
    roll = rng.random()
    if roll < 0.35:
        return f" Trace written to {_random_path(rng)}."
    if roll < 0.7:
        return f" The box at {_random_address(rng)} shows the same thing."
    return ""


def generate(
    n_bugs: int = 2000,
    seed: int = 7,
    invalid_fraction: float = 0.02,
) -> SynthCorpus:
    """Build the synthetic corpus and its matching vector store."""
    rng = np.random.default_rng(seed)
    per_cell = n_bugs // len(CELLS)
    n_invalid_cell = max(0, int(round(per_cell * invalid_fraction)))
    base_time = datetime(2024, 1, 1, tzinfo=timezone.utc)

    bugs: list[BugReport] = []
    serial = 0
    n_clusters = 0

    def next_id() -> str:
        nonlocal serial
        serial += 1
        return f"SYN-{serial:05d}"

    def render(
        subject: str,
        action_family: int,
        ctx: tuple[int, int],
        code: str,
        module: str,
        with_code_in_headline: bool,
    ) -> tuple[str, str]:
        action = _family_pick(rng, action_family)
        ctx_a = _family_pick(rng, ctx[0])
        ctx_b = _family_pick(rng, ctx[1])
        fault = _family_pick(rng, 4)
        headline = _HEADLINE_FRAMES[int(rng.integers(len(_HEADLINE_FRAMES)))].format(
            subject=subject, action=action, ctx_a=ctx_a, ctx_b=ctx_b, fault=fault
        )
        if with_code_in_headline:
            headline = f"{headline} ({code})"
        description = _DESC_FRAMES[int(rng.integers(len(_DESC_FRAMES)))].format(
            subject=subject,
            action=_family_pick(rng, action_family),
            ctx_a=_family_pick(rng, ctx[0]),
            ctx_b=_family_pick(rng, ctx[1]),
            code=code,
            module=module,
            noise=_noise(rng),
            filler=_FILLERS[int(rng.integers(len(_FILLERS)))],
        )
        return headline, description

    for product, component in CELLS:
        subjects = _SUBJECTS[(product, component)]
        # Per cell: clusters of size 2 and 3, singletons, a few invalid bugs.
        budget = per_cell - n_invalid_cell
        cluster_sizes: list[int] = []
        while budget >= 12:
            size = 2 if rng.random() < 0.6 else 3
            cluster_sizes.append(size)
            budget -= size
            if sum(cluster_sizes) >= (per_cell - n_invalid_cell) * 0.6:
                break
        n_singletons = per_cell - n_invalid_cell - sum(cluster_sizes)

        def make_bug(
            headline: str,
            description: str,
            status: Status,
            duplicate_of: str | None = None,
        ) -> BugReport:
            created = base_time + timedelta(minutes=serial)
            return BugReport(
                id=next_id(),
                headline=headline,
                description=description,
                project="synthetic",
                product=product,
                component=component,
                version=f"{int(rng.integers(1, 4))}.{int(rng.integers(0, 10))}",
                hardware="x86",
                severity=_SEVERITIES[int(rng.integers(len(_SEVERITIES)))],
                status=status,
                duplicate_of=duplicate_of,
                created_at=created,
            )

        for size in cluster_sizes:
            template_idx = int(rng.integers(len(subjects)))
            subject = subjects[template_idx]
            action_family = (0, 12, 9)[int(rng.integers(3))]
            ctx = _CONTEXTS[int(rng.integers(len(_CONTEXTS)))]
            code = f"err{int(rng.integers(1000, 9999))}{chr(97 + int(rng.integers(26)))}"
            module = _MODULES[int(rng.integers(len(_MODULES)))]
            head_id: str | None = None
            for member in range(size):
                headline, description = render(
                    subject, action_family, ctx, code, module,
                    with_code_in_headline=rng.random() < 0.5,
                )
                if head_id is None:
                    bug = make_bug(
                        headline,
                        description,
                        _STATUSES[int(rng.integers(len(_STATUSES)))],
                    )
                    head_id = bug.id
                else:
                    bug = make_bug(
                        headline, description, Status.DUPLICATE, duplicate_of=head_id
                    )
                bugs.append(bug)
            n_clusters += 1

        for _ in range(n_singletons):
            template_idx = int(rng.integers(len(subjects)))
            subject = subjects[template_idx]
            action_family = (0, 12, 9)[int(rng.integers(3))]
            ctx = _CONTEXTS[int(rng.integers(len(_CONTEXTS)))]
            code = f"err{int(rng.integers(1000, 9999))}{chr(97 + int(rng.integers(26)))}"
            module = _MODULES[int(rng.integers(len(_MODULES)))]
            headline, description = render(
                subject, action_family, ctx, code, module,
                with_code_in_headline=rng.random() < 0.5,
            )
            bugs.append(
                make_bug(
                    headline,
                    description,
                    _STATUSES[int(rng.integers(len(_STATUSES)))],
                )
            )

        for k in range(n_invalid_cell):
            if k % 2 == 0:
                bugs.append(make_bug("", "", Status.NEW))
            else:
                bugs.append(make_bug("panel is broken", "it broke.", Status.NEW))

    corpus = Corpus.from_bugs(bugs)
    store = _build_store(corpus, seed)
    n_invalid_total = n_invalid_cell * len(CELLS)
    return SynthCorpus(
        corpus=corpus, store=store, n_clusters=n_clusters, n_invalid=n_invalid_total
    )


def _build_store(corpus: Corpus, seed: int) -> WordVectorStore:
    """Vectors for every normalized corpus token; synonym stems stay close."""
    rng = np.random.default_rng(seed + 1)
    cfg = default_config()
    vocab: set[str] = set()
    for bug in corpus:
        vocab.update(normalize(bug.text(), cfg).tokens)

    family_of: dict[str, int] = {}
    for idx, family in enumerate(FAMILIES):
        for word in family:
            stem_token = normalize(word, cfg).tokens
            if stem_token:
                family_of[stem_token[0]] = idx

    def unit(vec: np.ndarray) -> np.ndarray:
        return vec / np.linalg.norm(vec)

    family_base = {
        idx: unit(rng.normal(size=EMBED_DIM)) for idx in range(len(FAMILIES))
    }
    vectors: dict[str, np.ndarray] = {}
    for token in sorted(vocab):
        if token in family_of:
            base = family_base[family_of[token]]
            vectors[token] = unit(base + 0.08 * rng.normal(size=EMBED_DIM))
        else:
            vectors[token] = unit(rng.normal(size=EMBED_DIM))
    return WordVectorStore(dim=EMBED_DIM, vectors=vectors)


def write_vec_file(synth: SynthCorpus, path: str | Path) -> None:
    save_vec_file(synth.store, path)
