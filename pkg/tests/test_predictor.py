from __future__ import annotations

import json

import numpy as np
import pytest

from declcf.encoding import Categorical, EncodingKind, EncodingSchema, Numeric, PAD
from declcf.errors import DegenerateDataError, ParseError, SchemaError
from declcf.predictor import (CATEGORICAL, DecisionTree, Hyperparams, RandomForestModel, f1_score, grid_search,
                              train)


def toy_schema() -> EncodingSchema:
    return EncodingSchema(EncodingKind.SimpleTraceIndex, 2, (("x", Numeric(0.0, 1.0)), ("y", Numeric(0.0, 1.0))),
                          Categorical((PAD, "A", "B")))


def toy_data(n=200, seed=0):
    rng = np.random.default_rng(seed)
    xy = rng.random((n, 2))
    acts = rng.integers(1, 3, size=(n, 2)).astype(float)
    X = np.hstack([xy, acts])
    y = (xy[:, 0] + xy[:, 1] > 1.0).astype(int)
    return X, y


def leaf_tree(neg, pos) -> DecisionTree:
    return DecisionTree(np.array([-1]), np.array([0]), np.array([0.0]), np.array([-1]), np.array([-1]),
                        np.array([[neg, pos]]))


def test_separable_toy_fits_training_data():
    X, y = toy_data()
    model = train(X, y, toy_schema(), Hyperparams(n_trees=25, max_depth=None, feature_subsample=1.0), seed=1)
    pred = (model.predict_proba_matrix(X) >= 0.5).astype(int)
    assert (pred == y).all()


def test_single_class_rejected():
    X, _ = toy_data(10)
    with pytest.raises(DegenerateDataError):
        train(X, np.zeros(10, dtype=int), toy_schema())


def test_training_is_deterministic():
    X, y = toy_data()
    a = train(X, y, toy_schema(), Hyperparams(n_trees=5), seed=3).to_dict()
    b = train(X, y, toy_schema(), Hyperparams(n_trees=5), seed=3).to_dict()
    assert json.dumps(a) == json.dumps(b)


def test_leaf_probabilities_and_mean():
    schema = toy_schema()
    one = RandomForestModel([leaf_tree(0, 4)], Hyperparams(1), 0, schema)
    assert one.predict_proba((0.1, 0.2, "A", "B")) == 1.0
    two = RandomForestModel([leaf_tree(0, 3), leaf_tree(5, 0)], Hyperparams(2), 0, schema)
    assert two.predict_proba((0.1, 0.2, "A", "B")) == 0.5
    assert two.predict((0.1, 0.2, "A", "B")) == 1  # ties go positive
    with pytest.raises(SchemaError):
        two.predict_proba((0.1, "A"))


def test_categorical_split_is_equality():
    schema = toy_schema()
    tree = DecisionTree(np.array([2, -1, -1]), np.array([CATEGORICAL, 0, 0]), np.array([2.0, 0, 0]),
                        np.array([1, -1, -1]), np.array([2, -1, -1]), np.array([[1, 1], [0, 3], [3, 0]]))
    model = RandomForestModel([tree], Hyperparams(1), 0, schema)
    assert model.predict_proba((0.5, 0.5, "B", "A")) == 1.0
    assert model.predict_proba((0.5, 0.5, "A", "A")) == 0.0


def test_leaf_counts_sum_to_samples():
    X, y = toy_data(120)
    model = train(X, y, toy_schema(), Hyperparams(n_trees=3), seed=0)
    for t in model.trees:
        for node in range(len(t.feature)):
            if t.feature[node] >= 0:
                assert (t.counts[node] == t.counts[t.left[node]] + t.counts[t.right[node]]).all()
                assert 0 <= t.feature[node] < 4
        assert t.counts[0].sum() == 120


def test_tree_order_does_not_change_probabilities():
    X, y = toy_data()
    model = train(X, y, toy_schema(), Hyperparams(n_trees=9), seed=2)
    shuffled = RandomForestModel(model.trees[::-1], model.hyperparams, 2, model.schema)
    assert np.array_equal(model.predict_proba_matrix(X), shuffled.predict_proba_matrix(X))


def test_save_load_gives_identical_predictions(tmp_path):
    X, y = toy_data()
    model = train(X, y, toy_schema(), Hyperparams(n_trees=10), seed=4)
    model.metadata["note"] = "kept"
    model.save(tmp_path / "m.json")
    loaded = RandomForestModel.load(tmp_path / "m.json")
    probe = np.hstack([np.random.default_rng(9).random((1000, 2)),
                       np.random.default_rng(8).integers(0, 3, (1000, 2))])
    assert np.array_equal(model.predict_proba_matrix(probe), loaded.predict_proba_matrix(probe))
    assert loaded.metadata == {"note": "kept"}
    assert loaded.to_dict() == model.to_dict()


def test_corrupt_model_file(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ParseError):
        RandomForestModel.load(tmp_path / "bad.json")
    (tmp_path / "other.json").write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ParseError):
        RandomForestModel.load(tmp_path / "other.json")


def test_smaller_forest_is_prefix_of_larger():
    X, y = toy_data()
    big = train(X, y, toy_schema(), Hyperparams(n_trees=8), seed=5)
    small = train(X, y, toy_schema(), Hyperparams(n_trees=3), seed=5)
    assert small.to_dict()["trees"] == big.to_dict()["trees"][:3]


def test_grid_search_rules():
    X, y = toy_data(300)
    vX, vy = toy_data(100, seed=1)
    only = Hyperparams(n_trees=5, max_depth=3)
    best, results = grid_search(X, y, vX, vy, toy_schema(), [only], seed=0)
    assert best == only and len(results) == 1
    stump, deep = Hyperparams(n_trees=5, max_depth=1), Hyperparams(n_trees=5, max_depth=None)
    best, results = grid_search(X, y, vX, vy, toy_schema(), [stump, deep], seed=0)
    assert results[1].f1 > results[0].f1 and best == deep


def test_grid_search_ties_prefer_fewer_trees_then_shallower():
    # one perfectly informative feature: every configuration reaches F1 = 1
    schema = EncodingSchema(EncodingKind.SimpleTraceIndex, 1, (("x", Numeric(0.0, 1.0)),), Categorical((PAD, "A")))
    X = np.array([[float(i % 2), 1.0] for i in range(40)])
    y = (X[:, 0] > 0.5).astype(int)
    grid = [Hyperparams(9, None, feature_subsample=1.0), Hyperparams(4, 6, feature_subsample=1.0),
            Hyperparams(4, 3, feature_subsample=1.0)]
    best, results = grid_search(X, y, X, y, schema, grid, seed=0)
    assert [r.f1 for r in results] == [1.0, 1.0, 1.0]
    assert best == grid[2]


def test_f1():
    assert f1_score([1, 0, 1, 1], [1, 0, 0, 1]) == pytest.approx(0.8)
    assert f1_score([0, 0], [0, 0]) == 0.0
