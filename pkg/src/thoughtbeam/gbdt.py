"""Gradient-boosted regression trees with exact greedy split search.

Squared-error boosting from scratch: the base score is the label mean and
every round fits one regression tree to the residuals.  Trees grow
leaf-wise, always splitting the leaf with the largest variance reduction.
Split search is exact (no binning, no sampling): candidate thresholds are
midpoints of consecutive distinct sorted feature values, ties break toward
the lowest feature index and then the lowest threshold, and leaf values are
mean residuals.  Training is therefore deterministic for a given dataset.

The estimator follows scikit-learn conventions (constructor stores params
verbatim, fitted attributes carry a trailing underscore) so it composes
with the usual tooling; the serializable artifact is ``GbdtModel``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .collect import TrainingExample
from .exceptions import ConfigurationError, DataError

MODEL_FORMAT_VERSION = 1

# Gains at or below this are treated as zero, so constant residuals yield
# single-leaf trees instead of noise-driven splits.
_MIN_GAIN = 1e-12


class _Tree:
    """One regression tree stored as parallel node arrays.

    ``feature[i] == -1`` marks a leaf; internal nodes route samples with
    ``x[feature] <= threshold`` to ``left`` and the rest to ``right``.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(
        self,
        feature: Sequence[int],
        threshold: Sequence[float],
        left: Sequence[int],
        right: Sequence[int],
        value: Sequence[float],
    ) -> None:
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)
        n = self.feature.size
        if not (
            self.threshold.size == n
            and self.left.size == n
            and self.right.size == n
            and self.value.size == n
        ):
            raise DataError("tree node arrays must share one length")

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.float64)
        stack: list[tuple[int, np.ndarray]] = [(0, np.arange(X.shape[0]))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            feat = self.feature[node]
            if feat < 0:
                out[rows] = self.value[node]
                continue
            go_left = X[rows, feat] <= self.threshold[node]
            stack.append((int(self.left[node]), rows[go_left]))
            stack.append((int(self.right[node]), rows[~go_left]))
        return out

    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "_Tree":
        try:
            return cls(
                obj["feature"], obj["threshold"], obj["left"], obj["right"], obj["value"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed tree record: {exc}") from exc


def _best_split(
    X: np.ndarray,
    residual: np.ndarray,
    rows: np.ndarray,
    min_samples_leaf: int,
) -> Optional[tuple[float, int, float]]:
    """Exact best (gain, feature, threshold) for one leaf, or None.

    Gain is the sum-of-squared-errors reduction.  The first argmax along
    each axis realizes the tie-break order: positions scan thresholds in
    ascending order within a feature, features scan in index order.
    """
    n = rows.size
    if n < 2 * min_samples_leaf or n < 2:
        return None
    Xs = X[rows]
    r = residual[rows]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)
    rs = r[order]
    csum = np.cumsum(rs, axis=0)
    csq = np.cumsum(rs * rs, axis=0)
    total = csum[-1, 0]
    total_sq = csq[-1, 0]
    parent_sse = total_sq - total * total / n

    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    lsum = csum[:-1]
    lsq = csq[:-1]
    sse_left = lsq - lsum * lsum / nl
    sse_right = (total_sq - lsq) - (total - lsum) * (total - lsum) / nr
    gain = parent_sse - sse_left - sse_right

    valid = xs[1:] > xs[:-1]
    if min_samples_leaf > 1:
        ok = (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
        valid = valid & ok
    gain = np.where(valid, gain, -np.inf)

    pos = np.argmax(gain, axis=0)
    per_feature = gain[pos, np.arange(gain.shape[1])]
    feat = int(np.argmax(per_feature))
    best = float(per_feature[feat])
    if not np.isfinite(best) or best <= _MIN_GAIN:
        return None
    j = int(pos[feat])
    threshold = float((xs[j, feat] + xs[j + 1, feat]) / 2.0)
    return best, feat, threshold


def _fit_tree(
    X: np.ndarray,
    residual: np.ndarray,
    max_leaves: int,
    min_samples_leaf: int,
) -> tuple[_Tree, dict[int, np.ndarray]]:
    """Grow one tree leaf-wise; returns it plus each leaf's row set."""
    n = X.shape[0]
    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    leaf_rows: dict[int, np.ndarray] = {0: np.arange(n)}
    cuts: dict[int, tuple[float, int, float]] = {}
    first = _best_split(X, residual, leaf_rows[0], min_samples_leaf)
    if first is not None:
        cuts[0] = first

    n_leaves = 1
    while n_leaves < max_leaves and cuts:
        # Largest gain wins; ties go to the earliest-created leaf.
        node = min(cuts, key=lambda nid: (-cuts[nid][0], nid))
        _, feat, thr = cuts.pop(node)
        rows = leaf_rows.pop(node)
        go_left = X[rows, feat] <= thr
        for rows_side in (rows[go_left], rows[~go_left]):
            nid = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            leaf_rows[nid] = rows_side
            best = _best_split(X, residual, rows_side, min_samples_leaf)
            if best is not None:
                cuts[nid] = best
        feature[node] = feat
        threshold[node] = thr
        left[node] = len(feature) - 2
        right[node] = len(feature) - 1
        n_leaves += 1

    value = [0.0] * len(feature)
    for nid, rows in leaf_rows.items():
        value[nid] = float(residual[rows].mean()) if rows.size else 0.0
    return _Tree(feature, threshold, left, right, value), leaf_rows


@dataclass
class GbdtModel:
    """Frozen prediction artifact: what gets saved, loaded, and queried."""

    version: int
    n_features: int
    learning_rate: float
    base_score: float
    clamp_output: bool
    trees: list[_Tree]

    def _check_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected a 2-D matrix with {self.n_features} columns, "
                f"got shape {getattr(X, 'shape', None)}"
            )
        return X

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_matrix(X)
        raw = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            raw += self.learning_rate * tree.predict(X)
        if self.clamp_output:
            raw = np.clip(raw, 0.0, 1.0)
        return raw

    def predict_one(self, features: np.ndarray) -> float:
        v = np.asarray(features, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("predict_one expects a 1-D feature vector")
        return float(self.predict(v[None, :])[0])

    def score(self, features: np.ndarray) -> float:
        """Predictor interface used by the search engines."""
        return self.predict_one(features)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "n_features": self.n_features,
            "learning_rate": self.learning_rate,
            "base_score": self.base_score,
            "clamp_output": self.clamp_output,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GbdtModel":
        try:
            version = int(doc["version"])
            if version != MODEL_FORMAT_VERSION:
                raise DataError(f"unsupported model version {version}")
            return cls(
                version=version,
                n_features=int(doc["n_features"]),
                learning_rate=float(doc["learning_rate"]),
                base_score=float(doc["base_score"]),
                clamp_output=bool(doc["clamp_output"]),
                trees=[_Tree.from_json(t) for t in doc["trees"]],
            )
        except DataError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model document: {exc}") from exc


class GradientBoostedTrees(BaseEstimator, RegressorMixin):
    """Scikit-learn style estimator around the boosting routine.

    Parameters mirror the usual GBDT surface; ``seed`` is accepted for
    interface stability but unused because exact split search involves no
    sampling.  Outputs are clamped to [0, 1] when ``clamp_output`` is set,
    matching labels that live in the unit interval.
    """

    def __init__(
        self,
        learning_rate: float = 0.05,
        n_rounds: int = 500,
        max_leaves: int = 31,
        min_samples_leaf: int = 20,
        clamp_output: bool = True,
        seed: int = 0,
    ) -> None:
        self.learning_rate = learning_rate
        self.n_rounds = n_rounds
        self.max_leaves = max_leaves
        self.min_samples_leaf = min_samples_leaf
        self.clamp_output = clamp_output
        self.seed = seed

    def _validate_params(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigurationError("learning_rate must lie in (0, 1]")
        if self.n_rounds < 0:
            raise ConfigurationError("n_rounds must be >= 0")
        if self.max_leaves < 2:
            raise ConfigurationError("max_leaves must be >= 2")
        if self.min_samples_leaf < 1:
            raise ConfigurationError("min_samples_leaf must be >= 1")

    @staticmethod
    def _check_X_y(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X must be a non-empty 2-D matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("y must be 1-D with one entry per row of X")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("X and y must be finite")
        return X, y

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GradientBoostedTrees":
        self._validate_params()
        X, y = self._check_X_y(X, y)
        base = float(np.mean(y))
        pred = np.full(X.shape[0], base, dtype=np.float64)
        trees: list[_Tree] = []
        mse = [float(np.mean((y - pred) ** 2))]
        for _ in range(self.n_rounds):
            residual = y - pred
            tree, leaf_rows = _fit_tree(
                X, residual, self.max_leaves, self.min_samples_leaf
            )
            for nid, rows in leaf_rows.items():
                if rows.size:
                    pred[rows] += self.learning_rate * tree.value[nid]
            trees.append(tree)
            mse.append(float(np.mean((y - pred) ** 2)))
        self.n_features_in_ = X.shape[1]
        self.base_score_ = base
        self.trees_ = trees
        self.train_mse_ = mse
        self.model_ = GbdtModel(
            version=MODEL_FORMAT_VERSION,
            n_features=X.shape[1],
            learning_rate=self.learning_rate,
            base_score=base,
            clamp_output=self.clamp_output,
            trees=trees,
        )
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.predict(X)


def dataset_matrix(
    dataset: Sequence[TrainingExample],
) -> tuple[np.ndarray, np.ndarray]:
    """Stack examples into (X, y); width mismatches are data errors."""
    if not dataset:
        raise DataError("dataset is empty")
    width = dataset[0].features.size
    for ex in dataset:
        if ex.features.size != width:
            raise DataError("examples disagree on feature width")
    X = np.stack([ex.features for ex in dataset]).astype(np.float64)
    y = np.asarray([ex.label for ex in dataset], dtype=np.float64)
    return X, y


def train(
    dataset: Sequence[TrainingExample], params: Optional[dict] = None
) -> GbdtModel:
    """Train on collected examples; ``params`` feed the estimator."""
    X, y = dataset_matrix(dataset)
    est = GradientBoostedTrees(**(params or {}))
    est.fit(X, y)
    return est.model_


def save_model(model: GbdtModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh)
        fh.write("\n")


def load_model(path: str | Path) -> GbdtModel:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    with fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return GbdtModel.from_json(doc)
