"""Gradient-boosted decision trees over sparse rows with logistic loss.

Second-order boosting: each round fits a regression tree to the gradient and
hessian of the weighted log-loss by exact greedy split search, with leaf
values -G/H. Absent (zero-valued) features route through splits by comparing
0 against the threshold, so tf-idf rows are never densified. Positive
examples carry ``scale_pos_weight`` in the loss.

Determinism: split-search ties break on the lowest feature index, then the
lowest threshold, and samples are canonicalized before training so permuting
the input row order leaves the trained model bitwise identical.

After each tree is fit and pruned, it is recentred so its root expectation is
zero, folding the offset into the model's base score. That makes the
per-prediction path attribution an exact decomposition: base score plus the
signed per-feature contributions reconstructs the margin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataValidationError, ParseError, TrainingError
from .vectorizer import SparseVector

MODEL_FORMAT = "memetriage-gbdt"
MODEL_VERSION = 1

_H_EPS = 1e-12
_GAIN_EPS = 1e-12


@dataclass
class TreeNode:
    """Internal node (feature/threshold/gain set, children present) or leaf.

    ``value`` is the log-odds increment the node would emit as a leaf;
    ``cover`` is the hessian mass of training rows that reached it.
    """

    value: float
    cover: float
    feature: int = -1
    threshold: float = 0.0
    gain: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def node_count(self) -> int:
        if self.is_leaf:
            return 1
        return 1 + self.left.node_count() + self.right.node_count()

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass(frozen=True)
class GbdtParams:
    n_estimators: int = 100
    learning_rate: float = 1.0
    max_depth: int = 40
    scale_pos_weight: float = 1.5
    min_gain_prune: float = 0.0
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.n_estimators < 1:
            raise DataValidationError("n_estimators must be >= 1")
        if self.learning_rate <= 0:
            raise DataValidationError("learning_rate must be > 0")
        if self.max_depth < 1:
            raise DataValidationError("max_depth must be >= 1")
        if self.scale_pos_weight <= 0:
            raise DataValidationError("scale_pos_weight must be > 0")
        if self.min_gain_prune < 0:
            raise DataValidationError("min_gain_prune must be >= 0")
        if self.min_samples_leaf < 1:
            raise DataValidationError("min_samples_leaf must be >= 1")


@dataclass
class GbdtModel:
    params: GbdtParams
    base_score: float
    trees: list[TreeNode]
    feature_names: list[str]
    dim: int
    feature_importances: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def predict_margin(self, row: SparseVector) -> float:
        if row.dim != self.dim:
            raise DataValidationError(f"row dimension {row.dim} != model dimension {self.dim}")
        values = row.to_dict()
        margin = self.base_score
        for tree in self.trees:
            node = tree
            while not node.is_leaf:
                if values.get(node.feature, 0.0) < node.threshold:
                    node = node.left
                else:
                    node = node.right
            margin += self.params.learning_rate * node.value
        return margin

    def predict_proba(self, row: SparseVector) -> float:
        """Probability the row is hateful; strictly inside (0, 1)."""
        return _sigmoid(self.predict_margin(row))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


class _ColumnStore:
    """CSC layout of the training rows: per feature, row indices and values.

    Row indices are in canonical (post-sort) sample order, which keeps every
    reduction order-independent of the caller's row ordering.
    """

    def __init__(self, rows: list[SparseVector], dim: int):
        cols: dict[int, tuple[list[int], list[float]]] = {}
        for sample, row in enumerate(rows):
            for feature, value in row.pairs:
                bucket = cols.get(feature)
                if bucket is None:
                    bucket = ([], [])
                    cols[feature] = bucket
                bucket[0].append(sample)
                bucket[1].append(value)
        self.dim = dim
        self.n_samples = len(rows)
        self.rows = rows
        self.columns = {
            f: (np.asarray(r, dtype=np.intp), np.asarray(v, dtype=np.float64))
            for f, (r, v) in cols.items()
        }

    def features_in(self, mask: np.ndarray) -> list[int]:
        present: set[int] = set()
        for sample in np.flatnonzero(mask):
            for feature, _ in self.rows[sample].pairs:
                present.add(feature)
        return sorted(present)

    def left_mask(self, mask: np.ndarray, feature: int, threshold: float) -> np.ndarray:
        """Rows of `mask` routed left (value < threshold, absent counts as 0)."""
        left = np.zeros(self.n_samples, dtype=bool)
        col = self.columns.get(feature)
        if col is not None:
            rows_f, vals_f = col
            sel = mask[rows_f]
            rows_in = rows_f[sel]
            left[rows_in[vals_f[sel] < threshold]] = True
            if 0.0 < threshold:
                explicit = np.zeros(self.n_samples, dtype=bool)
                explicit[rows_in] = True
                left |= mask & ~explicit
        elif 0.0 < threshold:
            left |= mask
        return left


def _best_split(
    store: _ColumnStore,
    mask: np.ndarray,
    count: int,
    g: np.ndarray,
    h: np.ndarray,
    total_g: float,
    total_h: float,
    min_samples_leaf: int,
) -> tuple[int, float, float] | None:
    """Exact greedy search; returns (feature, threshold, gain) or None.

    Ties break on lowest feature then lowest threshold via strict gain
    comparison over an ascending scan.
    """
    parent_score = total_g * total_g / max(total_h, _H_EPS)
    best: tuple[int, float, float] | None = None
    best_gain = 0.0
    for feature in store.features_in(mask):
        rows_f, vals_f = store.columns[feature]
        sel = mask[rows_f]
        sv = vals_f[sel]
        rows_in = rows_f[sel]
        sg = g[rows_in]
        sh = h[rows_in]
        n_zero = count - len(sv)
        order = np.argsort(sv, kind="stable")
        sv, sg, sh = sv[order], sg[order], sh[order]
        if n_zero > 0:
            # zero bucket sits between negative and positive explicit values
            cut = int(np.searchsorted(sv, 0.0))
            zero_g = total_g - float(sg.sum())
            zero_h = total_h - float(sh.sum())
            sv = np.concatenate([sv[:cut], [0.0], sv[cut:]])
            sg = np.concatenate([sg[:cut], [zero_g], sg[cut:]])
            sh = np.concatenate([sh[:cut], [zero_h], sh[cut:]])
            cnt = np.ones(len(sv))
            cnt[cut] = n_zero
        else:
            cnt = np.ones(len(sv))
        if len(sv) < 2:
            continue
        boundary = sv[1:] != sv[:-1]
        if not boundary.any():
            continue
        cum_g = np.cumsum(sg)[:-1][boundary]
        cum_h = np.cumsum(sh)[:-1][boundary]
        cum_n = np.cumsum(cnt)[:-1][boundary]
        thresholds = (sv[:-1][boundary] + sv[1:][boundary]) / 2.0
        ok = (cum_n >= min_samples_leaf) & (count - cum_n >= min_samples_leaf)
        if not ok.any():
            continue
        right_g = total_g - cum_g
        right_h = total_h - cum_h
        gains = 0.5 * (
            cum_g * cum_g / np.maximum(cum_h, _H_EPS)
            + right_g * right_g / np.maximum(right_h, _H_EPS)
            - parent_score
        )
        gains = np.where(ok, gains, -np.inf)
        j = int(np.argmax(gains))
        gain = float(gains[j])
        # strict > keeps the first of any tie: lowest feature, lowest threshold
        if gain > _GAIN_EPS and gain > best_gain:
            best = (feature, float(thresholds[j]), gain)
            best_gain = gain
    return best


def _build_tree(
    store: _ColumnStore,
    mask: np.ndarray,
    count: int,
    depth: int,
    g: np.ndarray,
    h: np.ndarray,
    params: GbdtParams,
) -> TreeNode:
    total_g = float(g[mask].sum())
    total_h = float(h[mask].sum())
    value = -total_g / total_h if total_h > _H_EPS else 0.0
    node = TreeNode(value=value, cover=total_h)
    if depth >= params.max_depth or count < 2 * params.min_samples_leaf:
        return node
    found = _best_split(store, mask, count, g, h, total_g, total_h, params.min_samples_leaf)
    if found is None:
        return node
    feature, threshold, gain = found
    left_mask = store.left_mask(mask, feature, threshold)
    left_count = int(left_mask.sum())
    if left_count == 0 or left_count == count:
        return node
    node.feature = feature
    node.threshold = threshold
    node.gain = gain
    node.left = _build_tree(store, left_mask, left_count, depth + 1, g, h, params)
    node.right = _build_tree(store, mask & ~left_mask, count - left_count, depth + 1, g, h, params)
    return node


def _prune(node: TreeNode, min_gain: float) -> TreeNode:
    """Bottom-up: collapse internal nodes whose gain fell below the threshold."""
    if node.is_leaf:
        return node
    node.left = _prune(node.left, min_gain)
    node.right = _prune(node.right, min_gain)
    if node.left.is_leaf and node.right.is_leaf and node.gain < min_gain:
        return TreeNode(value=node.value, cover=node.cover)
    return node


def _shift_values(node: TreeNode, delta: float) -> None:
    node.value -= delta
    if not node.is_leaf:
        _shift_values(node.left, delta)
        _shift_values(node.right, delta)


def _apply_tree(
    store: _ColumnStore, node: TreeNode, mask: np.ndarray, margins: np.ndarray, lr: float
) -> None:
    if node.is_leaf:
        margins[mask] += lr * node.value
        return
    left_mask = store.left_mask(mask, node.feature, node.threshold)
    _apply_tree(store, node.left, left_mask, margins, lr)
    _apply_tree(store, node.right, mask & ~left_mask, margins, lr)


def _collect_gains(node: TreeNode, totals: np.ndarray) -> None:
    if node.is_leaf:
        return
    totals[node.feature] += node.gain
    _collect_gains(node.left, totals)
    _collect_gains(node.right, totals)


def compute_importances(trees: list[TreeNode], dim: int) -> np.ndarray:
    """Per-feature total split gain, normalized to sum 1 (zeros if no splits)."""
    totals = np.zeros(dim)
    for tree in trees:
        _collect_gains(tree, totals)
    mass = totals.sum()
    if mass > 0:
        totals /= mass
    return totals


def train_gbdt(
    rows: list[SparseVector],
    labels: list[int],
    params: GbdtParams,
    feature_names: list[str],
) -> GbdtModel:
    """Boost on weighted logistic loss; deterministic and row-order invariant."""
    if not rows:
        raise DataValidationError("training requires at least one row")
    if len(rows) != len(labels):
        raise DataValidationError(f"{len(rows)} rows but {len(labels)} labels")
    dim = rows[0].dim
    for row in rows:
        if row.dim != dim:
            raise DataValidationError(f"row dimension {row.dim} != {dim}")
    if len(feature_names) != dim:
        raise DataValidationError(f"{len(feature_names)} feature names for dimension {dim}")
    y = np.asarray(labels, dtype=np.float64)
    if set(labels) != {0, 1}:
        raise TrainingError("training labels must contain both classes")

    # canonical sample order: model invariant under permutations of the input
    order = sorted(range(len(rows)), key=lambda i: (labels[i], rows[i].pairs))
    rows = [rows[i] for i in order]
    y = y[order]

    w = np.where(y == 1.0, params.scale_pos_weight, 1.0)
    sum_pos = float(w[y == 1.0].sum())
    sum_neg = float(w[y == 0.0].sum())
    base_score = math.log(sum_pos / sum_neg)

    store = _ColumnStore(rows, dim)
    n = len(rows)
    margins = np.full(n, base_score)
    root_mask = np.ones(n, dtype=bool)
    trees: list[TreeNode] = []
    loss_history: list[float] = []
    for _ in range(params.n_estimators):
        p = 1.0 / (1.0 + np.exp(-margins))
        g = w * (p - y)
        h = w * p * (1.0 - p)
        tree = _build_tree(store, root_mask, n, 0, g, h, params)
        tree = _prune(tree, params.min_gain_prune)
        # recentre: root expectation folds into the base score so path
        # attribution decomposes the margin exactly
        delta = tree.value
        _shift_values(tree, delta)
        base_score += params.learning_rate * delta
        margins += params.learning_rate * delta
        _apply_tree(store, tree, root_mask, margins, params.learning_rate)
        trees.append(tree)
        p = np.clip(1.0 / (1.0 + np.exp(-margins)), 1e-15, 1.0 - 1e-15)
        loss = float(-(w * (y * np.log(p) + (1.0 - y) * np.log(1.0 - p))).sum() / w.sum())
        loss_history.append(loss)

    return GbdtModel(
        params=params,
        base_score=base_score,
        trees=trees,
        feature_names=list(feature_names),
        dim=dim,
        feature_importances=compute_importances(trees, dim),
        loss_history=loss_history,
    )


def predict_proba(model: GbdtModel, row: SparseVector) -> float:
    return model.predict_proba(row)


@dataclass(frozen=True)
class ImportanceReport:
    """Global ranking of strictly-positive importance scores."""

    entries: list[tuple[str, float]]
    n_positive_features: int


def feature_importance_report(model: GbdtModel, top_k: int) -> ImportanceReport:
    """Descending by score, ties by name; only strictly positive scores."""
    scored = [
        (model.feature_names[i], float(s))
        for i, s in enumerate(model.feature_importances)
        if s > 0.0
    ]
    scored.sort(key=lambda e: (-e[1], e[0]))
    return ImportanceReport(entries=scored[:top_k], n_positive_features=len(scored))


@dataclass(frozen=True)
class AttributionEntry:
    index: int
    name: str
    contribution: float


@dataclass(frozen=True)
class AttributionResult:
    """Signed per-feature decomposition: bias + sum(contributions) == margin."""

    entries: list[AttributionEntry]
    bias: float
    margin: float


def attribute_prediction(
    model: GbdtModel, row: SparseVector, top_k: int | None = None
) -> AttributionResult:
    """Path attribution: each traversed split's feature receives the change in
    cover-weighted expected leaf value between parent and chosen child, summed
    across trees and scaled by the learning rate."""
    if row.dim != model.dim:
        raise DataValidationError(f"row dimension {row.dim} != model dimension {model.dim}")
    values = row.to_dict()
    lr = model.params.learning_rate
    contributions: dict[int, float] = {}
    margin = model.base_score
    for tree in model.trees:
        node = tree
        while not node.is_leaf:
            child = node.left if values.get(node.feature, 0.0) < node.threshold else node.right
            delta = lr * (child.value - node.value)
            contributions[node.feature] = contributions.get(node.feature, 0.0) + delta
            node = child
        margin += lr * node.value
    entries = [
        AttributionEntry(index=i, name=model.feature_names[i], contribution=c)
        for i, c in contributions.items()
        if c != 0.0
    ]
    entries.sort(key=lambda e: (-abs(e.contribution), e.name))
    if top_k is not None:
        entries = entries[:top_k]
    return AttributionResult(entries=entries, bias=model.base_score, margin=margin)


def _serialize_tree(node: TreeNode, out: list[dict]) -> None:
    if node.is_leaf:
        out.append({"v": node.value, "c": node.cover})
    else:
        out.append(
            {
                "f": node.feature,
                "t": node.threshold,
                "g": node.gain,
                "v": node.value,
                "c": node.cover,
            }
        )
        _serialize_tree(node.left, out)
        _serialize_tree(node.right, out)


def _deserialize_tree(nodes: list[dict], pos: list[int]) -> TreeNode:
    obj = nodes[pos[0]]
    pos[0] += 1
    node = TreeNode(value=float(obj["v"]), cover=float(obj["c"]))
    if "f" in obj:
        node.feature = int(obj["f"])
        node.threshold = float(obj["t"])
        node.gain = float(obj["g"])
        node.left = _deserialize_tree(nodes, pos)
        node.right = _deserialize_tree(nodes, pos)
    return node


def save_gbdt(model: GbdtModel, path, split_seed: int | None = None) -> None:
    """Versioned JSON with a preorder node list per tree; reload is bitwise."""
    trees = []
    for tree in model.trees:
        nodes: list[dict] = []
        _serialize_tree(tree, nodes)
        trees.append(nodes)
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": {
            "n_estimators": model.params.n_estimators,
            "learning_rate": model.params.learning_rate,
            "max_depth": model.params.max_depth,
            "scale_pos_weight": model.params.scale_pos_weight,
            "min_gain_prune": model.params.min_gain_prune,
            "min_samples_leaf": model.params.min_samples_leaf,
        },
        "base_score": model.base_score,
        "dim": model.dim,
        "feature_names": model.feature_names,
        "loss_history": model.loss_history,
        "split_seed": split_seed,
        "trees": trees,
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_gbdt(path) -> tuple[GbdtModel, int | None]:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a valid model file: {exc.msg}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ParseError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ParseError(f"{path}: unsupported model version {payload.get('version')!r}")
    params = GbdtParams(**payload["params"])
    trees = [_deserialize_tree(nodes, [0]) for nodes in payload["trees"]]
    dim = int(payload["dim"])
    model = GbdtModel(
        params=params,
        base_score=float(payload["base_score"]),
        trees=trees,
        feature_names=list(payload["feature_names"]),
        dim=dim,
        feature_importances=compute_importances(trees, dim),
        loss_history=[float(x) for x in payload.get("loss_history", [])],
    )
    seed = payload.get("split_seed")
    return model, (int(seed) if seed is not None else None)
