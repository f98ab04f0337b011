"""Black-box outcome predictor: a CART random forest over encoded prefixes.

Categorical features split by equality against a single domain code
(one-vs-rest), numeric features by a ``<=`` threshold. Impurity is Gini.
Every tree draws from its own RNG stream seeded by ``(seed, tree index)``, so
a forest of 50 trees is exactly the first half of a 100-tree forest trained
with the same seed.
"""

from __future__ import annotations

import itertools
import json
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encoding import EncodingSchema, Numeric
from .errors import DegenerateDataError, ParseError, SchemaError

FORMAT = "declcf-predictor"
FORMAT_VERSION = 1

NUMERIC, CATEGORICAL = 0, 1


class Predictor(ABC):
    """The black box: positive-class probability for encoded vectors."""

    schema: EncodingSchema

    @abstractmethod
    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        """Positive-class probabilities for the rows of ``schema.to_matrix(...)``."""

    def predict_proba_many(self, vectors: Iterable[Sequence]) -> np.ndarray:
        return self.predict_proba_matrix(self.schema.to_matrix(vectors))

    def predict_proba(self, vector: Sequence) -> float:
        self.schema.check_vector(vector)
        return float(self.predict_proba_many([vector])[0])

    def predict(self, vector: Sequence) -> int:
        return int(self.predict_proba(vector) >= 0.5)


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 50
    max_depth: int | None = 8
    min_leaf: int = 1
    feature_subsample: float = 0.6

    def sort_key(self) -> tuple:
        return (self.n_trees, math.inf if self.max_depth is None else self.max_depth)


DEFAULT_GRID = tuple(
    Hyperparams(n, d, m)
    for n, d, m in itertools.product((50, 100), (4, 8, None), (1, 5)))


@dataclass
class DecisionTree:
    feature: np.ndarray  # -1 marks a leaf
    kind: np.ndarray
    value: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2): negatives, positives

    @property
    def leaf_proba(self) -> np.ndarray:
        tot = self.counts.sum(axis=1)
        return np.where(tot > 0, self.counts[:, 1] / np.maximum(tot, 1), 0.0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                return node
            cur = node[active]
            xv = X[active, feat[active]]
            val = self.value[cur]
            go_left = np.where(self.kind[cur] == CATEGORICAL, xv == val, xv <= val)
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "kind": self.kind.tolist(),
            "value": self.value.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> DecisionTree:
        return cls(
            np.array(d["feature"], dtype=np.int64), np.array(d["kind"], dtype=np.int64),
            np.array(d["value"], dtype=float), np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["counts"], dtype=np.int64).reshape(-1, 2))


@dataclass
class RandomForestModel(Predictor):
    trees: list[DecisionTree]
    hyperparams: Hyperparams
    seed: int
    schema: EncodingSchema
    metadata: dict = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.schema.n_features:
            raise SchemaError(f"expected {self.schema.n_features} features, got shape {X.shape}")
        per_tree = np.stack([t.leaf_proba[t.apply(X)] for t in self.trees], axis=1)
        # sorted summation makes the mean independent of tree order
        return np.sort(per_tree, axis=1).sum(axis=1) / len(self.trees)

    def subset(self, n_trees: int) -> RandomForestModel:
        hp = Hyperparams(n_trees, self.hyperparams.max_depth, self.hyperparams.min_leaf,
                         self.hyperparams.feature_subsample)
        return RandomForestModel(self.trees[:n_trees], hp, self.seed, self.schema, dict(self.metadata))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "format_version": FORMAT_VERSION,
            "schema": self.schema.to_dict(),
            "hyperparams": asdict(self.hyperparams),
            "seed": self.seed,
            "metadata": self.metadata,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> RandomForestModel:
        if d.get("format") != FORMAT or d.get("format_version") != FORMAT_VERSION:
            raise ParseError(f"not a version-{FORMAT_VERSION} {FORMAT} file")
        try:
            return cls([DecisionTree.from_dict(t) for t in d["trees"]], Hyperparams(**d["hyperparams"]),
                       int(d["seed"]), EncodingSchema.from_dict(d["schema"]), d.get("metadata", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"corrupt predictor file: {exc!r}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> RandomForestModel:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(f"{path}: corrupt predictor file: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"{path}: corrupt predictor file")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _best_numeric(x: np.ndarray, y: np.ndarray, min_leaf: int):
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    pos_left = np.cumsum(ys)[:-1]
    n_left = np.arange(1, n)
    valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not valid.any():
        return None
    total_pos = ys.sum()
    n_right = n - n_left
    pos_right = total_pos - pos_left
    imp = (2 * pos_left * (n_left - pos_left) / n_left
           + 2 * pos_right * (n_right - pos_right) / n_right)
    imp = np.where(valid, imp, np.inf)
    i = int(np.argmin(imp))
    return imp[i], NUMERIC, (xs[i] + xs[i + 1]) / 2


def _best_categorical(x: np.ndarray, y: np.ndarray, min_leaf: int):
    codes, inverse = np.unique(x, return_inverse=True)
    if len(codes) < 2:
        return None
    n = len(x)
    n_left = np.bincount(inverse, minlength=len(codes)).astype(float)
    pos_left = np.bincount(inverse, weights=y, minlength=len(codes))
    n_right = n - n_left
    valid = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    pos_right = y.sum() - pos_left
    with np.errstate(divide="ignore", invalid="ignore"):
        imp = (2 * pos_left * (n_left - pos_left) / n_left
               + 2 * pos_right * (n_right - pos_right) / n_right)
    imp = np.where(valid, imp, np.inf)
    i = int(np.argmin(imp))
    return imp[i], CATEGORICAL, codes[i]


def _grow_tree(X: np.ndarray, y: np.ndarray, hp: Hyperparams, numeric: np.ndarray,
               rng: np.random.Generator) -> DecisionTree:
    n_features = X.shape[1]
    n_try = max(1, min(n_features, round(hp.feature_subsample * n_features)))
    max_depth = math.inf if hp.max_depth is None else hp.max_depth
    feature, kind, value, left, right, counts = [], [], [], [], [], []

    def new_node(idx):
        pos = int(y[idx].sum())
        feature.append(-1)
        kind.append(NUMERIC)
        value.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((len(idx) - pos, pos))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        neg, pos = counts[node]
        if depth >= max_depth or neg == 0 or pos == 0 or len(idx) < 2 * hp.min_leaf:
            continue
        yy = y[idx].astype(float)
        parent_imp = 2 * pos * neg / len(idx)
        best = None
        for j in rng.choice(n_features, size=n_try, replace=False):
            finder = _best_numeric if numeric[j] else _best_categorical
            found = finder(X[idx, j], yy, hp.min_leaf)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], int(j), found[1], found[2])
        if best is None or best[0] >= parent_imp - 1e-12:
            continue
        _, j, k, v = best
        mask = (X[idx, j] == v) if k == CATEGORICAL else (X[idx, j] <= v)
        feature[node], kind[node], value[node] = j, k, float(v)
        li, ri = new_node(idx[mask]), new_node(idx[~mask])
        left[node], right[node] = li, ri
        stack.append((ri, idx[~mask], depth + 1))
        stack.append((li, idx[mask], depth + 1))
    return DecisionTree(np.array(feature, dtype=np.int64), np.array(kind, dtype=np.int64),
                        np.array(value, dtype=float), np.array(left, dtype=np.int64),
                        np.array(right, dtype=np.int64), np.array(counts, dtype=np.int64).reshape(-1, 2))


def train(X: np.ndarray, y: Sequence[int], schema: EncodingSchema,
          hyperparams: Hyperparams | None = None, seed: int = 0) -> RandomForestModel:
    """Fit a forest on ``X = schema.to_matrix(vectors)`` with binary labels ``y``."""
    hp = hyperparams or Hyperparams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise DegenerateDataError("training needs at least two samples from both classes")
    if X.shape != (len(y), schema.n_features):
        raise SchemaError(f"training matrix shape {X.shape} does not match schema")
    numeric = np.array([isinstance(d, Numeric) for d in schema.domains])
    trees = []
    for t in range(hp.n_trees):
        rng = np.random.default_rng([seed, t])
        boot = rng.integers(0, len(y), len(y))
        trees.append(_grow_tree(X[boot], y[boot], hp, numeric, rng))
    return RandomForestModel(trees, hp, seed, schema)


def f1_score(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


@dataclass(frozen=True)
class GridResult:
    hyperparams: Hyperparams
    f1: float


def grid_search(train_X, train_y, valid_X, valid_y, schema: EncodingSchema,
                grid: Sequence[Hyperparams] = DEFAULT_GRID, seed: int = 0
                ) -> tuple[Hyperparams, list[GridResult]]:
    """Exhaustive search by validation F1; ties go to fewer trees, then shallower."""
    if not grid:
        raise ValueError("empty hyperparameter grid")
    # forests sharing depth/leaf/subsample settings are prefixes of the largest one
    largest: dict[tuple, RandomForestModel] = {}
    for hp in grid:
        key = (hp.max_depth, hp.min_leaf, hp.feature_subsample)
        if key not in largest or largest[key].n_trees < hp.n_trees:
            n_max = max(g.n_trees for g in grid if (g.max_depth, g.min_leaf, g.feature_subsample) == key)
            largest[key] = train(train_X, train_y, schema, Hyperparams(n_max, *key), seed)
    results = []
    for hp in grid:
        model = largest[(hp.max_depth, hp.min_leaf, hp.feature_subsample)].subset(hp.n_trees)
        pred = (model.predict_proba_matrix(valid_X) >= 0.5).astype(int)
        results.append(GridResult(hp, f1_score(valid_y, pred)))
    best = min(results, key=lambda r: (-r.f1,) + r.hyperparams.sort_key())
    return best.hyperparams, results
