"""Labeled pair construction, leakage-free train/test splitting, candidates.

Positives are all unordered within-cluster pairs; negatives are sampled
uniformly among same-product+component pairs that do not share a cluster,
matching the serving-time candidate distribution. The train/test split is
grouped by bug id: no id contributes pairs to both sides.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .corpus import BugReport, Corpus, DuplicateClusters


class PairsError(Exception):
    """Fatal pairing/splitting problem (no positives, unsatisfiable split)."""


@dataclass(frozen=True)
class LabeledPair:
    id_a: str
    id_b: str
    label: int

    def __post_init__(self) -> None:
        if self.id_a == self.id_b:
            raise PairsError(f"pair of a bug with itself: {self.id_a}")
        if self.label not in (0, 1):
            raise PairsError(f"label must be 0 or 1, got {self.label}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.id_a, self.id_b) if self.id_a < self.id_b else (self.id_b, self.id_a)


@dataclass(frozen=True)
class SplitReport:
    total: int
    train_pos: int
    train_neg: int
    test_pos: int
    test_neg: int
    dropped: int

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "train_pos": self.train_pos,
            "train_neg": self.train_neg,
            "test_pos": self.test_pos,
            "test_neg": self.test_neg,
            "dropped": self.dropped,
        }


@dataclass(frozen=True)
class SplitResult:
    train: list[LabeledPair]
    test: list[LabeledPair]
    report: SplitReport


def build_training_pairs(
    corpus: Corpus,
    clusters: DuplicateClusters,
    neg_per_pos: float = 1.0,
    seed: int = 0,
) -> list[LabeledPair]:
    """All within-cluster positives plus seeded same-cell negatives."""
    if neg_per_pos <= 0:
        raise PairsError("neg_per_pos must be > 0")
    if not clusters.clusters:
        raise PairsError("no positive examples: corpus has no duplicate clusters")

    positives: list[LabeledPair] = []
    for cid in sorted(clusters.clusters):
        members = sorted(clusters.clusters[cid])
        present = [m for m in members if m in corpus]
        for id_a, id_b in combinations(present, 2):
            positives.append(LabeledPair(id_a=id_a, id_b=id_b, label=1))

    rng = np.random.default_rng(seed)
    n_neg = int(round(neg_per_pos * len(positives)))
    cells: dict[tuple[str, str], list[str]] = {}
    for bug in corpus:
        cells.setdefault((bug.product, bug.component), []).append(bug.id)

    candidates: list[tuple[str, str]] = []
    for cell_key in sorted(cells):
        ids = sorted(cells[cell_key])
        for id_a, id_b in combinations(ids, 2):
            if not clusters.same_cluster(id_a, id_b):
                candidates.append((id_a, id_b))
    if n_neg < len(candidates):
        chosen = rng.choice(len(candidates), size=n_neg, replace=False)
        chosen.sort()
        negatives = [candidates[i] for i in chosen]
    else:
        negatives = candidates
    pairs = positives + [
        LabeledPair(id_a=a, id_b=b, label=0) for a, b in negatives
    ]
    keys = {p.key for p in pairs}
    if len(keys) != len(pairs):
        raise PairsError("internal error: duplicate pair keys")
    return pairs


def _positive_groups(pairs: list[LabeledPair]) -> dict[str, set[str]]:
    """Connected components over positive pairs (union-find by id)."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pair in pairs:
        if pair.label == 1:
            ra, rb = find(pair.id_a), find(pair.id_b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[str, set[str]] = {}
    for bug_id in parent:
        groups.setdefault(find(bug_id), set()).add(bug_id)
    return groups


def train_test_split(
    pairs: list[LabeledPair],
    test_fraction: float,
    seed: int = 0,
    rate_tolerance: float = 0.02,
) -> SplitResult:
    """Group split by bug id with a stratified test side.

    Duplicate clusters are atomic: whole clusters move to the test side
    until the test size and positive-rate targets are reachable. Pairs
    straddling the boundary are dropped and reported exactly.
    """
    if not 0.0 < test_fraction < 1.0:
        raise PairsError("test_fraction must be in (0, 1)")
    n_total = len(pairs)
    positives = [p for p in pairs if p.label == 1]
    negatives = [p for p in pairs if p.label == 0]
    rate = len(positives) / n_total if n_total else 0.0
    target_test = int(round(test_fraction * n_total))
    tgt_pos = int(round(rate * target_test))
    tgt_neg = target_test - tgt_pos
    if target_test < 1:
        raise PairsError(
            f"too few pairs to split: {n_total} total, fraction {test_fraction}"
        )
    if n_total and abs(tgt_pos / target_test - rate) > rate_tolerance + 1e-12:
        raise PairsError(
            f"cannot stratify a test set of {target_test} pairs to the "
            f"overall positive rate {rate:.4f}"
        )

    groups = _positive_groups(pairs)
    cluster_of: dict[str, str] = {}
    for root, members in groups.items():
        for member in members:
            cluster_of[member] = root
    group_positives: dict[str, list[LabeledPair]] = {r: [] for r in groups}
    for pair in positives:
        group_positives[cluster_of[pair.id_a]].append(pair)

    rng = np.random.default_rng(seed)
    order = sorted(groups)
    rng.shuffle(order)

    test_ids: set[str] = set()
    pos_pool: list[LabeledPair] = []

    def neg_available() -> list[LabeledPair]:
        # Negatives whose endpoints are each on the test side or unclaimed
        # by any cluster (free ids bind at selection time).
        avail = []
        for pair in negatives:
            ok = True
            for bug_id in (pair.id_a, pair.id_b):
                if bug_id in test_ids:
                    continue
                if bug_id in cluster_of:
                    ok = False
                    break
            if ok:
                avail.append(pair)
        return avail

    satisfied = False
    used_groups = 0
    for root in order:
        if len(pos_pool) >= tgt_pos and len(neg_available()) >= tgt_neg:
            satisfied = True
            break
        test_ids |= groups[root]
        pos_pool.extend(group_positives[root])
        used_groups += 1
    else:
        satisfied = (
            len(pos_pool) >= tgt_pos and len(neg_available()) >= tgt_neg
        )
    if not satisfied or used_groups == len(order):
        avail = len(neg_available())
        raise PairsError(
            "cannot satisfy the grouped stratified split: "
            f"need {tgt_pos} test positives ({len(pos_pool)} reachable) and "
            f"{tgt_neg} test negatives ({avail} reachable) out of "
            f"{n_total} pairs"
        )

    pos_pool.sort(key=lambda p: p.key)
    chosen_pos_idx = rng.choice(len(pos_pool), size=tgt_pos, replace=False)
    chosen_pos_idx.sort()
    test_pos = [pos_pool[i] for i in chosen_pos_idx]

    avail_neg = sorted(neg_available(), key=lambda p: p.key)
    chosen_neg_idx = rng.choice(len(avail_neg), size=tgt_neg, replace=False)
    chosen_neg_idx.sort()
    test_neg = [avail_neg[i] for i in chosen_neg_idx]
    for pair in test_neg:
        test_ids.add(pair.id_a)
        test_ids.add(pair.id_b)

    test = test_pos + test_neg
    test_keys = {p.key for p in test}
    train = [
        p
        for p in pairs
        if p.key not in test_keys
        and p.id_a not in test_ids
        and p.id_b not in test_ids
    ]
    report = SplitReport(
        total=n_total,
        train_pos=sum(1 for p in train if p.label == 1),
        train_neg=sum(1 for p in train if p.label == 0),
        test_pos=len(test_pos),
        test_neg=len(test_neg),
        dropped=n_total - len(train) - len(test),
    )
    return SplitResult(train=train, test=test, report=report)


def candidate_set(new_bug: BugReport, corpus: Corpus) -> list[BugReport]:
    """All stored bugs sharing product and component, newest first."""
    matches = [
        bug
        for bug in corpus
        if bug.product == new_bug.product
        and bug.component == new_bug.component
        and bug.id != new_bug.id
    ]
    matches.sort(key=lambda b: b.id)
    matches.sort(key=lambda b: b.created_at, reverse=True)
    return matches


def save_pairs_csv(pairs: list[LabeledPair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id_a", "id_b", "label"])
        for pair in pairs:
            writer.writerow([pair.id_a, pair.id_b, pair.label])


def load_pairs_csv(path: str | Path) -> list[LabeledPair]:
    pairs: list[LabeledPair] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            pairs.append(
                LabeledPair(
                    id_a=row["id_a"], id_b=row["id_b"], label=int(row["label"])
                )
            )
    return pairs
