"""Classification metrics, pair-set evaluation, and ranked duplicate retrieval.

Precision = TP/(TP+FP), recall = TP/(TP+FN), F1 = 2PR/(P+R), accuracy =
(TP+TN)/total; any 0/0 denominator yields 0.0 by convention. A probability
equal to the threshold counts as a positive prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BugReport, Corpus
from .embedding import WordVectorStore
from .features import BugDoc, FeatureDiagnostics, PosLexicon, pair_features, prepare_bug
from .gbdt import GBDTModel, logloss, predict_proba_batch
from .pairs import LabeledPair, candidate_set
from .preprocess import CleanConfig


class EvalError(Exception):
    """Fatal evaluation problem (length mismatch, unknown bug id)."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    logloss: float
    confusion: ConfusionMatrix
    threshold: float

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "logloss": self.logloss,
            "confusion": {
                "tp": self.confusion.tp,
                "fp": self.confusion.fp,
                "tn": self.confusion.tn,
                "fn": self.confusion.fn,
            },
            "threshold": self.threshold,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        rows = [
            ("Precision", self.precision),
            ("Recall", self.recall),
            ("F1-Score", self.f1),
            ("Accuracy", self.accuracy),
        ]
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value * 100:6.2f}%" for name, value in rows]
        return "\n".join(lines)


@dataclass(frozen=True)
class RankedCandidate:
    bug_id: str
    probability: float
    headline: str


def confusion(
    labels: Sequence[int], probs: Sequence[float], threshold: float
) -> ConfusionMatrix:
    if len(labels) != len(probs):
        raise EvalError(
            f"labels ({len(labels)}) and probabilities ({len(probs)}) differ"
        )
    if not 0.0 < threshold < 1.0:
        raise EvalError("threshold must be in (0, 1)")
    tp = fp = tn = fn = 0
    for label, prob in zip(labels, probs):
        predicted = prob >= threshold
        if predicted and label == 1:
            tp += 1
        elif predicted and label == 0:
            fp += 1
        elif not predicted and label == 0:
            tn += 1
        else:
            fn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp)


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn)


def f1(cm: ConfusionMatrix) -> float:
    p, r = precision(cm), recall(cm)
    return 2.0 * p * r / (p + r) if p + r else 0.0


def accuracy(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.tn, cm.total)


def metrics_report(
    labels: Sequence[int], probs: Sequence[float], threshold: float
) -> MetricsReport:
    cm = confusion(labels, probs, threshold)
    return MetricsReport(
        precision=precision(cm),
        recall=recall(cm),
        f1=f1(cm),
        accuracy=accuracy(cm),
        logloss=logloss(labels, probs),
        confusion=cm,
        threshold=threshold,
    )


def featurize_pairs(
    pairs: Sequence[LabeledPair],
    corpus: Corpus,
    store: WordVectorStore,
    cfg: CleanConfig,
    lexicon: PosLexicon | None = None,
    diagnostics: FeatureDiagnostics | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and label vector for a pair list; docs cached per bug."""
    docs: dict[str, BugDoc] = {}

    def doc_for(bug_id: str) -> BugDoc:
        if bug_id not in docs:
            if bug_id not in corpus:
                raise EvalError(f"pair references unknown bug id {bug_id!r}")
            docs[bug_id] = prepare_bug(corpus.get(bug_id), cfg, store, lexicon)
        return docs[bug_id]

    rows = [
        pair_features(doc_for(p.id_a), doc_for(p.id_b), diagnostics).values
        for p in pairs
    ]
    X = np.vstack(rows) if rows else np.empty((0, 28))
    y = np.array([p.label for p in pairs], dtype=np.int64)
    return X, y


def evaluate_model(
    model: GBDTModel,
    test_pairs: Sequence[LabeledPair],
    corpus: Corpus,
    store: WordVectorStore,
    cfg: CleanConfig,
    threshold: float = 0.5,
    lexicon: PosLexicon | None = None,
) -> MetricsReport:
    X, y = featurize_pairs(test_pairs, corpus, store, cfg, lexicon)
    probs = predict_proba_batch(model, X)
    return metrics_report(list(y), list(probs), threshold)


def rank_candidates(
    new_bug: BugReport,
    corpus: Corpus,
    model: GBDTModel,
    store: WordVectorStore,
    cfg: CleanConfig,
    top_k: int = 10,
    lexicon: PosLexicon | None = None,
) -> list[RankedCandidate]:
    """Score the new bug against its candidate set, best matches first.

    Ties break toward newer created_at, then lexicographic id.
    """
    if top_k < 1:
        raise EvalError("top_k must be >= 1")
    candidates = candidate_set(new_bug, corpus)
    if not candidates:
        return []
    new_doc = prepare_bug(new_bug, cfg, store, lexicon)
    rows = []
    for cand in candidates:
        cand_doc = prepare_bug(cand, cfg, store, lexicon)
        rows.append(pair_features(new_doc, cand_doc).values)
    probs = predict_proba_batch(model, np.vstack(rows))
    scored = list(zip(candidates, probs))
    scored.sort(key=lambda item: item[0].id)
    scored.sort(key=lambda item: item[0].created_at, reverse=True)
    scored.sort(key=lambda item: item[1], reverse=True)
    return [
        RankedCandidate(
            bug_id=cand.id, probability=float(prob), headline=cand.headline
        )
        for cand, prob in scored[:top_k]
    ]
