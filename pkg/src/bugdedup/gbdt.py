"""Gradient-boosted decision trees for binary classification on logloss.

Second-order boosting on the logistic objective with exact greedy split
enumeration: per round the gradient is p - y and the hessian p(1 - p);
split gain is 0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)]
- gamma, splits with gain <= 0 or a child hessian sum below
min_child_weight are rejected, and leaf weights are -G/(H+lambda) scaled
by the learning rate. Internal nodes route value < threshold left.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .features import FEATURE_SCHEMA, FeatureSchema, PairFeatures

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = "1"
_PROB_CLAMP = 1e-15


class GBDTError(Exception):
    """Fatal training/prediction problem (bad labels, schema mismatch...)."""


class SchemaMismatchError(GBDTError):
    """Feature vector does not conform to the model's schema hash."""


@dataclass(frozen=True)
class Hyperparams:
    subsample: float = 0.8
    n_estimators: int = 300
    min_child_weight: float = 5.0
    max_depth: int = 4
    gamma: float = 1.5
    colsample_bytree: float = 0.8
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.subsample <= 1.0:
            raise GBDTError("subsample must be in (0, 1]")
        if self.n_estimators < 0:
            raise GBDTError("n_estimators must be >= 0")
        if self.min_child_weight < 0:
            raise GBDTError("min_child_weight must be >= 0")
        if self.max_depth < 1:
            raise GBDTError("max_depth must be >= 1")
        if self.gamma < 0:
            raise GBDTError("gamma must be >= 0")
        if not 0.0 < self.colsample_bytree <= 1.0:
            raise GBDTError("colsample_bytree must be in (0, 1]")
        if self.learning_rate <= 0:
            raise GBDTError("learning_rate must be > 0")
        if self.reg_lambda < 0:
            raise GBDTError("reg_lambda must be >= 0")


@dataclass
class TreeNode:
    """Internal node (feature/threshold/gain/children) or leaf (weight)."""

    weight: float | None = None
    feature_index: int | None = None
    threshold: float | None = None
    gain: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None

    def route(self, row: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            if row[node.feature_index] < node.threshold:
                node = node.left
            else:
                node = node.right
        return node.weight


@dataclass
class GBDTModel:
    trees: list[TreeNode]
    hyperparams: Hyperparams
    schema_hash: str
    base_score: float = 0.0  # log-odds of the 0.5 prior
    version: str = MODEL_FORMAT_VERSION
    train_logloss: list[float] = field(default_factory=list, repr=False)


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-z))


def logloss(y: Sequence[float], p: Sequence[float]) -> float:
    """Negative mean Bernoulli log-likelihood with probability clamping."""
    y_arr = np.asarray(y, dtype=np.float64)
    p_arr = np.asarray(p, dtype=np.float64)
    if y_arr.shape != p_arr.shape:
        raise GBDTError(
            f"label/probability length mismatch: {y_arr.shape} vs {p_arr.shape}"
        )
    if y_arr.size == 0:
        raise GBDTError("logloss needs at least one sample")
    p_arr = np.clip(p_arr, _PROB_CLAMP, 1.0 - _PROB_CLAMP)
    return float(
        -np.mean(y_arr * np.log(p_arr) + (1.0 - y_arr) * np.log(1.0 - p_arr))
    )


def _best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    hp: Hyperparams,
) -> tuple[float, int, float] | None:
    """Exact greedy search; returns (gain, feature, threshold) or None.

    Ties break toward the lowest feature index, then the lowest threshold
    (strict > comparisons over ascending candidates).
    """
    g_sum = float(g[rows].sum())
    h_sum = float(h[rows].sum())
    parent_score = g_sum * g_sum / (h_sum + hp.reg_lambda)
    best: tuple[float, int, float] | None = None
    for feature in cols:
        values = X[rows, feature]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        if sv[0] == sv[-1]:
            continue
        gl = np.cumsum(g[rows][order])[:-1]
        hl = np.cumsum(h[rows][order])[:-1]
        gr = g_sum - gl
        hr = h_sum - hl
        valid = sv[1:] != sv[:-1]
        valid &= hl >= hp.min_child_weight
        valid &= hr >= hp.min_child_weight
        if not valid.any():
            continue
        gain = (
            0.5
            * (
                gl * gl / (hl + hp.reg_lambda)
                + gr * gr / (hr + hp.reg_lambda)
                - parent_score
            )
            - hp.gamma
        )
        gain[~valid] = -np.inf
        pos = int(np.argmax(gain))
        top = float(gain[pos])
        if top <= 0.0:
            continue
        if best is None or top > best[0]:
            threshold = (float(sv[pos]) + float(sv[pos + 1])) / 2.0
            best = (top, int(feature), threshold)
    return best


def _build_node(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    depth: int,
    hp: Hyperparams,
) -> TreeNode:
    g_sum = float(g[rows].sum())
    h_sum = float(h[rows].sum())
    leaf_weight = -g_sum / (h_sum + hp.reg_lambda) * hp.learning_rate
    if depth >= hp.max_depth or len(rows) < 2:
        return TreeNode(weight=leaf_weight)
    found = _best_split(X, g, h, rows, cols, hp)
    if found is None:
        return TreeNode(weight=leaf_weight)
    gain, feature, threshold = found
    left_mask = X[rows, feature] < threshold
    left_rows = rows[left_mask]
    right_rows = rows[~left_mask]
    return TreeNode(
        feature_index=feature,
        threshold=threshold,
        gain=gain,
        left=_build_node(X, g, h, left_rows, cols, depth + 1, hp),
        right=_build_node(X, g, h, right_rows, cols, depth + 1, hp),
    )


def _tree_margin(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    return np.array([tree.route(row) for row in X], dtype=np.float64)


def train(
    X: np.ndarray,
    y: Sequence[int],
    hp: Hyperparams | None = None,
    schema: FeatureSchema | None = None,
) -> GBDTModel:
    """Fit the boosted ensemble; deterministic for a fixed hp.seed.

    `schema` defaults to the frozen pair-feature schema when X has its
    width, otherwise to a positional f0..fN schema.
    """
    hp = hp or Hyperparams()
    hp.validate()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise GBDTError("X must be a 2-d matrix")
    y_arr = np.asarray(y, dtype=np.float64)
    if X.shape[0] != y_arr.shape[0]:
        raise GBDTError("X rows and y length differ")
    if y_arr.shape[0] < 2:
        raise GBDTError("need at least two training rows")
    if not np.all(np.isfinite(X)):
        raise GBDTError("X contains non-finite values")
    if not set(np.unique(y_arr)) <= {0.0, 1.0}:
        raise GBDTError("labels must be 0/1")
    if len(np.unique(y_arr)) < 2:
        raise GBDTError("training labels contain a single class")
    if schema is None:
        if X.shape[1] == FEATURE_SCHEMA.length:
            schema = FEATURE_SCHEMA
        else:
            schema = FeatureSchema(
                names=tuple(f"f{i}" for i in range(X.shape[1]))
            )
    if schema.length != X.shape[1]:
        raise GBDTError(
            f"schema length {schema.length} != feature count {X.shape[1]}"
        )

    n_rows, n_features = X.shape
    rng = np.random.default_rng(hp.seed)
    margin = np.zeros(n_rows, dtype=np.float64)
    trees: list[TreeNode] = []
    history: list[float] = []
    n_sub = max(1, int(math.floor(hp.subsample * n_rows)))
    n_cols = max(1, int(round(hp.colsample_bytree * n_features)))
    for _ in range(hp.n_estimators):
        p = _sigmoid(margin)
        g = p - y_arr
        h = p * (1.0 - p)
        if n_sub < n_rows:
            rows = np.sort(rng.choice(n_rows, size=n_sub, replace=False))
        else:
            rows = np.arange(n_rows)
        if n_cols < n_features:
            cols = np.sort(rng.choice(n_features, size=n_cols, replace=False))
        else:
            cols = np.arange(n_features)
        tree = _build_node(X, g, h, rows, cols, depth=0, hp=hp)
        # A root with no admissible positive-gain split rejects the whole
        # round: only gain-bearing splits may move the margin, which is what
        # keeps training logloss non-increasing.
        if not tree.is_leaf:
            trees.append(tree)
            margin += _tree_margin(tree, X)
        history.append(logloss(y_arr, _sigmoid(margin)))
    return GBDTModel(
        trees=trees,
        hyperparams=hp,
        schema_hash=schema.hash(),
        train_logloss=history,
    )


def predict_margin(model: GBDTModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    margin = np.full(X.shape[0], model.base_score, dtype=np.float64)
    for tree in model.trees:
        margin += _tree_margin(tree, X)
    return margin


def predict_proba(model: GBDTModel, x: PairFeatures | np.ndarray) -> float:
    """Probability for one feature vector; schema hash is verified."""
    if isinstance(x, PairFeatures):
        if x.schema_hash != model.schema_hash:
            raise SchemaMismatchError(
                f"feature schema {x.schema_hash[:12]} does not match model "
                f"schema {model.schema_hash[:12]}"
            )
        row = np.asarray(x.values, dtype=np.float64)
    else:
        row = np.asarray(x, dtype=np.float64)
    margin = model.base_score + sum(tree.route(row) for tree in model.trees)
    return float(_sigmoid(margin))


def predict_proba_batch(model: GBDTModel, X: np.ndarray) -> np.ndarray:
    return _sigmoid(predict_margin(model, X))


def feature_importance(
    model: GBDTModel, schema: FeatureSchema = FEATURE_SCHEMA
) -> dict[str, float]:
    """Gain-based importance per feature, normalized to sum to one.

    A model with no splits at all yields an all-zero map (with a warning).
    """
    if schema.hash() != model.schema_hash:
        raise SchemaMismatchError(
            "schema passed to feature_importance does not match the model"
        )
    totals = np.zeros(schema.length, dtype=np.float64)

    def visit(node: TreeNode) -> None:
        if node.is_leaf:
            return
        totals[node.feature_index] += node.gain
        visit(node.left)
        visit(node.right)

    for tree in model.trees:
        visit(tree)
    total = totals.sum()
    if total <= 0.0:
        logger.warning("model has no splits; importance map is all zeros")
        return {name: 0.0 for name in schema.names}
    normalized = totals / total
    return {name: float(v) for name, v in zip(schema.names, normalized)}


def _node_to_json(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"w": node.weight}
    return {
        "f": node.feature_index,
        "t": node.threshold,
        "gain": node.gain,
        "l": _node_to_json(node.left),
        "r": _node_to_json(node.right),
    }


def _node_from_json(obj: dict) -> TreeNode:
    if "w" in obj:
        return TreeNode(weight=float(obj["w"]))
    return TreeNode(
        feature_index=int(obj["f"]),
        threshold=float(obj["t"]),
        gain=float(obj["gain"]),
        left=_node_from_json(obj["l"]),
        right=_node_from_json(obj["r"]),
    )


def save_model(model: GBDTModel, path: str | Path) -> None:
    """JSON dump with full float precision; predictions round-trip bit-exactly."""
    payload = {
        "version": model.version,
        "schema_hash": model.schema_hash,
        "hyperparams": asdict(model.hyperparams),
        "base_score": model.base_score,
        "trees": [_node_to_json(t) for t in model.trees],
    }
    Path(path).write_text(
        json.dumps(payload, indent=None, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> GBDTModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise GBDTError(f"cannot load model from {path}: {exc}") from exc
    try:
        hp = Hyperparams(**payload["hyperparams"])
        model = GBDTModel(
            trees=[_node_from_json(t) for t in payload["trees"]],
            hyperparams=hp,
            schema_hash=str(payload["schema_hash"]),
            base_score=float(payload["base_score"]),
            version=str(payload["version"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise GBDTError(f"malformed model file {path}: {exc}") from exc
    return model


def grid_search(
    X: np.ndarray,
    y: Sequence[int],
    grid: Mapping[str, Iterable],
    folds: int,
    base_hp: Hyperparams | None = None,
) -> Hyperparams:
    """Exhaustive grid search by k-fold cross-validated mean logloss.

    Folds are stratified and seeded from base_hp.seed; ties break toward
    the earliest combination in grid order.
    """
    if folds < 2:
        raise GBDTError("folds must be >= 2")
    if not grid:
        raise GBDTError("grid must be non-empty")
    base_hp = base_hp or Hyperparams()
    X = np.asarray(X, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64)
    class_counts = [int((y_arr == c).sum()) for c in (0.0, 1.0)]
    if min(class_counts) < folds:
        raise GBDTError(
            f"fold count {folds} exceeds the smaller class count "
            f"{min(class_counts)}"
        )
    rng = np.random.default_rng(base_hp.seed)
    fold_of = np.empty(len(y_arr), dtype=np.int64)
    for cls in (0.0, 1.0):
        idx = np.flatnonzero(y_arr == cls)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(len(idx)) % folds

    names = list(grid.keys())
    best_hp: Hyperparams | None = None
    best_score = np.inf
    for combo in itertools.product(*(list(grid[k]) for k in names)):
        hp = replace(base_hp, **dict(zip(names, combo)))
        scores = []
        for fold in range(folds):
            train_idx = np.flatnonzero(fold_of != fold)
            val_idx = np.flatnonzero(fold_of == fold)
            model = train(X[train_idx], y_arr[train_idx], hp)
            probs = predict_proba_batch(model, X[val_idx])
            scores.append(logloss(y_arr[val_idx], probs))
        mean_score = float(np.mean(scores))
        if mean_score < best_score:
            best_score = mean_score
            best_hp = hp
    assert best_hp is not None
    return best_hp
