"""Bagged decision-forest classifier, built from scratch on numpy.

Each tree trains on a seeded bootstrap of the rows and, at every node,
searches ceil(sqrt(d)) randomly drawn candidate features for the axis-aligned
threshold with the largest Gini impurity decrease.  Thresholds sit at
midpoints between consecutive distinct sorted values, so every internal node
splits its subset non-trivially.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np

MODEL_FORMAT = "forest-model"
MODEL_VERSION = 1
LEAF = -1


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tree_index,)))


def bootstrap_indices(seed: int, tree_index: int, n_rows: int) -> np.ndarray:
    """The bootstrap row draws for one tree, resolved by seed alone.

    ``fit_forest`` consumes exactly these draws first from the same generator,
    so the per-tree training multiset can be reproduced without fitting.
    """
    return _tree_rng(seed, tree_index).integers(0, n_rows, size=n_rows)


def _gini(n0: float, n1: float) -> float:
    n = n0 + n1
    if n == 0:
        return 0.0
    p = n1 / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(X, y, rows, feat_ids):
    """Best (feature, threshold, gain) over the candidate features, or None.

    Ties keep the earlier candidate feature and the leftmost cut, so results
    are reproducible for a fixed candidate order.
    """
    ys = y[rows]
    n = rows.size
    n1 = int(ys.sum())
    parent = _gini(n - n1, n1)
    best = None
    best_gain = 0.0
    for f in feat_ids:
        xs = X[rows, f]
        order = np.argsort(xs, kind="mergesort")
        sx = xs[order]
        sy = ys[order]
        cuts = np.flatnonzero(sx[1:] != sx[:-1])
        if cuts.size == 0:
            continue
        left_pos = np.cumsum(sy)[cuts].astype(float)
        n_left = cuts + 1.0
        n_right = n - n_left
        left_neg = n_left - left_pos
        right_pos = n1 - left_pos
        right_neg = n_right - right_pos
        g_left = 1.0 - (left_neg / n_left) ** 2 - (left_pos / n_left) ** 2
        g_right = 1.0 - (right_neg / n_right) ** 2 - (right_pos / n_right) ** 2
        gains = parent - (n_left * g_left + n_right * g_right) / n
        k = int(np.argmax(gains))
        if gains[k] > best_gain + 1e-15:
            best_gain = float(gains[k])
            threshold = float(0.5 * (sx[cuts[k]] + sx[cuts[k] + 1]))
            best = (int(f), threshold, best_gain)
    return best


@dataclass
class Tree:
    """Flat-array binary tree; node 0 is the root, feature -1 marks a leaf.

    Every node keeps its training class counts, so leaf votes always sum to
    the number of training samples that reached the leaf.
    """

    feature: list[int]
    threshold: list[float]
    left: list[int]
    right: list[int]
    count0: list[int]
    count1: list[int]

    @classmethod
    def grow(cls, X, y, rng, *, max_depth, features_per_split, min_samples_split):
        tree = cls([], [], [], [], [], [])
        d = X.shape[1]
        m = min(features_per_split, d)

        def build(rows: np.ndarray, depth: int) -> int:
            node = len(tree.feature)
            n1 = int(y[rows].sum())
            n0 = rows.size - n1
            tree.feature.append(LEAF)
            tree.threshold.append(0.0)
            tree.left.append(LEAF)
            tree.right.append(LEAF)
            tree.count0.append(n0)
            tree.count1.append(n1)
            if depth >= max_depth or rows.size < min_samples_split or n0 == 0 or n1 == 0:
                return node
            feat_ids = rng.choice(d, size=m, replace=False)
            found = _best_split(X, y, rows, feat_ids)
            if found is None:
                return node
            f, threshold, _ = found
            mask = X[rows, f] <= threshold
            tree.feature[node] = f
            tree.threshold[node] = threshold
            tree.left[node] = build(rows[mask], depth + 1)
            tree.right[node] = build(rows[~mask], depth + 1)
            return node

        build(np.arange(X.shape[0]), 0)
        return tree

    def vote(self, x) -> int:
        node = 0
        while self.feature[node] != LEAF:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        # Tied leaf counts vote for the negative class.
        return 1 if self.count1[node] > self.count0[node] else 0

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "count0": self.count0,
            "count1": self.count1,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Tree":
        return cls(
            list(payload["feature"]),
            [float(v) for v in payload["threshold"]],
            list(payload["left"]),
            list(payload["right"]),
            list(payload["count0"]),
            list(payload["count1"]),
        )


@dataclass
class ForestModel:
    trees: list[Tree]
    n_features: int
    n_trees: int
    max_depth: int
    features_per_split: int
    min_samples_split: int
    seed: int
    feature_names: tuple[str, ...] | None = None

    def save(self, path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "n_features": self.n_features,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "features_per_split": self.features_per_split,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "trees": [t.to_dict() for t in self.trees],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=None, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ForestModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
        if payload.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version")
        names = payload["feature_names"]
        return cls(
            trees=[Tree.from_dict(t) for t in payload["trees"]],
            n_features=payload["n_features"],
            n_trees=payload["n_trees"],
            max_depth=payload["max_depth"],
            features_per_split=payload["features_per_split"],
            min_samples_split=payload["min_samples_split"],
            seed=payload["seed"],
            feature_names=tuple(names) if names else None,
        )


def fit_forest(
    X,
    y,
    *,
    n_trees: int = 170,
    max_depth: int = 12,
    features_per_split: int | None = None,
    min_samples_split: int = 2,
    seed: int = 42,
    feature_names=None,
) -> ForestModel:
    """Train a bagged forest of Gini decision trees on binary labels."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with one label per row")
    if n_trees < 1 or max_depth < 1:
        raise ValueError("n_trees and max_depth must be positive")
    classes = np.unique(y)
    if not np.array_equal(classes, [0, 1]):
        raise ValueError("training labels must include both classes 0 and 1")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length does not match X")
    n, d = X.shape
    m = features_per_split if features_per_split else math.ceil(math.sqrt(d))
    trees = []
    for i in range(n_trees):
        rng = _tree_rng(seed, i)
        idx = rng.integers(0, n, size=n)  # == bootstrap_indices(seed, i, n)
        trees.append(
            Tree.grow(
                X[idx],
                y[idx],
                rng,
                max_depth=max_depth,
                features_per_split=m,
                min_samples_split=min_samples_split,
            )
        )
    return ForestModel(
        trees=trees,
        n_features=d,
        n_trees=n_trees,
        max_depth=max_depth,
        features_per_split=m,
        min_samples_split=min_samples_split,
        seed=seed,
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )


def predict_forest(model: ForestModel, x, names=None) -> tuple[int, float]:
    """Label and positive-vote share for one feature row.

    The score is the fraction of trees voting positive; the label is positive
    exactly when the score reaches 0.5.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {x.size}")
    if names is not None and model.feature_names is not None:
        if tuple(names) != model.feature_names:
            raise ValueError("feature names do not match the model")
    votes = sum(tree.vote(x) for tree in model.trees)
    score = votes / len(model.trees)
    return (1 if score >= 0.5 else 0), score


@dataclass
class EvalReport:
    accuracy: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int


def evaluate(model: ForestModel, X, y) -> EvalReport:
    """Held-out accuracy, positive-class F1, and the 2x2 confusion counts."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.size or X.shape[0] == 0:
        raise ValueError("evaluation needs matching, non-empty X and y")
    preds = np.array([predict_forest(model, row)[0] for row in X])
    tp = int(np.sum((preds == 1) & (y == 1)))
    fp = int(np.sum((preds == 1) & (y == 0)))
    fn = int(np.sum((preds == 0) & (y == 1)))
    tn = int(np.sum((preds == 0) & (y == 0)))
    accuracy = (tp + tn) / y.size
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return EvalReport(accuracy, f1, tp, fp, fn, tn)


# ---------------------------------------------------------------------------
# Splitting and model selection


def stratified_split(labels, *, test_frac: float = 0.2, seed: int = 42):
    """Deterministic stratified train/test split; returns index arrays."""
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must be in (0, 1)")
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    test: list[int] = []
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        k = int(round(test_frac * idx.size))
        if idx.size > 1:
            k = min(max(k, 1), idx.size - 1)
        else:
            k = 0
        test.extend(idx[:k].tolist())
    test_idx = np.array(sorted(test), dtype=int)
    train_idx = np.setdiff1d(np.arange(y.size), test_idx)
    return train_idx, test_idx


def _stratified_folds(y, k_folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k_folds)]
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        for pos, row in enumerate(idx):
            folds[pos % k_folds].append(int(row))
    return [np.array(sorted(f), dtype=int) for f in folds]


def grid_search(
    X,
    y,
    tree_counts,
    *,
    k_folds: int = 10,
    seed: int = 42,
    max_depth: int = 12,
    features_per_split: int | None = None,
) -> tuple[int, dict[int, float]]:
    """Pick the tree count with the best mean stratified-CV accuracy.

    Ties go to the smaller forest.  Every training fold must contain both
    classes, which round-robin stratification guarantees whenever each class
    has at least two members.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    counts = sorted(set(int(c) for c in tree_counts))
    if not counts:
        raise ValueError("no tree counts to search")
    if k_folds < 2 or k_folds > y.size:
        raise ValueError("k_folds must be between 2 and the number of rows")
    class_sizes = np.bincount(y)
    if class_sizes.min() < 2:
        raise ValueError("each class needs at least two members for CV")
    folds = _stratified_folds(y, k_folds, seed)
    scores: dict[int, float] = {}
    for n_trees in counts:
        accs = []
        for held_out in folds:
            if held_out.size == 0:
                continue
            train = np.setdiff1d(np.arange(y.size), held_out)
            model = fit_forest(
                X[train],
                y[train],
                n_trees=n_trees,
                max_depth=max_depth,
                features_per_split=features_per_split,
                seed=seed,
            )
            preds = np.array([predict_forest(model, row)[0] for row in X[held_out]])
            accs.append(float(np.mean(preds == y[held_out])))
        scores[n_trees] = float(np.mean(accs))
    best = max(scores.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    return best, scores
