"""Bagged-forest training, splitting mechanics, and model selection."""

import numpy as np
import pytest

from forumsurv.forest import (
    ForestModel,
    Tree,
    _best_split,
    _gini,
    bootstrap_indices,
    evaluate,
    fit_forest,
    grid_search,
    predict_forest,
    stratified_split,
)


def xor_data(n=120, noise_dims=3, seed=9):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n, 2)).astype(float)
    y = (bits[:, 0] != bits[:, 1]).astype(int)
    X = np.column_stack([bits, rng.normal(size=(n, noise_dims))])
    return X, y


# -----------------------------------------------------------------------
# Split mechanics
# -----------------------------------------------------------------------


def test_gini_values():
    assert _gini(4, 0) == 0.0
    assert _gini(0, 0) == 0.0
    assert _gini(3, 3) == 0.5
    assert _gini(2, 1) == pytest.approx(4 / 9)


def test_best_split_hand_case():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    rows = np.arange(4)
    f, threshold, gain = _best_split(X, np.array([0, 0, 1, 1]), rows, np.array([0]))
    assert (f, threshold) == (0, 2.5)
    assert gain == pytest.approx(0.5)
    # Alternating labels: both boundary cuts tie, the leftmost one wins.
    f, threshold, gain = _best_split(X, np.array([0, 1, 0, 1]), rows, np.array([0]))
    assert (f, threshold) == (0, 1.5)
    assert gain == pytest.approx(1 / 6)


def test_best_split_tie_keeps_earlier_candidate():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    y = np.array([0, 0, 1, 1])
    f, _, _ = _best_split(X, y, np.arange(4), np.array([1, 0]))
    assert f == 1


def test_best_split_constant_feature_gives_none():
    X = np.ones((6, 1))
    assert _best_split(X, np.array([0, 1, 0, 1, 0, 1]), np.arange(6), np.array([0])) is None


def test_tree_leaf_tie_votes_negative():
    tree = Tree.grow(
        np.zeros((2, 1)),
        np.array([0, 1]),
        np.random.default_rng(0),
        max_depth=5,
        features_per_split=1,
        min_samples_split=2,
    )
    assert tree.feature == [-1]
    assert (tree.count0[0], tree.count1[0]) == (1, 1)
    assert tree.vote(np.zeros(1)) == 0


def test_tree_counts_are_conserved():
    X, y = xor_data(n=150)
    tree = Tree.grow(
        X, y, np.random.default_rng(3), max_depth=12, features_per_split=3,
        min_samples_split=2,
    )
    assert (tree.count0[0], tree.count1[0]) == (int((y == 0).sum()), int(y.sum()))
    for node, f in enumerate(tree.feature):
        if f == -1:
            continue
        left, right = tree.left[node], tree.right[node]
        assert tree.count0[node] == tree.count0[left] + tree.count0[right]
        assert tree.count1[node] == tree.count1[left] + tree.count1[right]


def test_max_depth_limits_tree():
    X, y = xor_data(n=100)
    tree = Tree.grow(
        X, y, np.random.default_rng(1), max_depth=1, features_per_split=5,
        min_samples_split=2,
    )
    assert len(tree.feature) <= 3


# -----------------------------------------------------------------------
# Forest training
# -----------------------------------------------------------------------


def test_bootstrap_indices_contract():
    idx = bootstrap_indices(42, 0, 50)
    assert idx.shape == (50,)
    assert idx.min() >= 0 and idx.max() < 50
    np.testing.assert_array_equal(idx, bootstrap_indices(42, 0, 50))
    assert not np.array_equal(idx, bootstrap_indices(42, 1, 50))
    assert not np.array_equal(idx, bootstrap_indices(43, 0, 50))


def test_forest_learns_xor():
    X, y = xor_data(n=160)
    model = fit_forest(X, y, n_trees=30, seed=4)
    report = evaluate(model, X, y)
    assert report.accuracy >= 0.95


def test_forest_serialization_deterministic(tmp_path):
    X, y = xor_data(n=80)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    fit_forest(X, y, n_trees=12, seed=11, feature_names=[f"f{i}" for i in range(5)]).save(p1)
    fit_forest(X, y, n_trees=12, seed=11, feature_names=[f"f{i}" for i in range(5)]).save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    p3 = tmp_path / "c.json"
    fit_forest(X, y, n_trees=12, seed=12).save(p3)
    assert p1.read_bytes() != p3.read_bytes()


def test_forest_roundtrip_predicts_identically(tmp_path):
    X, y = xor_data(n=80)
    model = fit_forest(X, y, n_trees=10, seed=2)
    p = tmp_path / "m.json"
    model.save(p)
    loaded = ForestModel.load(p)
    for row in X[:20]:
        assert predict_forest(model, row) == predict_forest(loaded, row)
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        ForestModel.load(bad)


def test_predict_score_is_vote_fraction():
    always = Tree([-1], [0.0], [-1], [-1], [0], [5])
    never = Tree([-1], [0.0], [-1], [-1], [5], [0])
    model = ForestModel(
        trees=[always, never], n_features=2, n_trees=2, max_depth=1,
        features_per_split=1, min_samples_split=2, seed=0,
    )
    label, score = predict_forest(model, np.zeros(2))
    assert score == 0.5
    assert label == 1  # threshold is inclusive at one half
    with pytest.raises(ValueError):
        predict_forest(model, np.zeros(3))
    named = ForestModel(
        trees=[always], n_features=1, n_trees=1, max_depth=1,
        features_per_split=1, min_samples_split=2, seed=0, feature_names=("a",),
    )
    with pytest.raises(ValueError):
        predict_forest(named, np.zeros(1), names=("b",))


def test_fit_input_validation():
    X, y = xor_data(n=40)
    with pytest.raises(ValueError):
        fit_forest(X, np.zeros(40, dtype=int))  # single class
    with pytest.raises(ValueError):
        fit_forest(X, y[:-1])
    with pytest.raises(ValueError):
        fit_forest(X, y, n_trees=0)
    with pytest.raises(ValueError):
        fit_forest(X, y, feature_names=["just_one"])


def test_evaluate_confusion_oracle():
    always = Tree([-1], [0.0], [-1], [-1], [0], [5])
    model = ForestModel(
        trees=[always], n_features=1, n_trees=1, max_depth=1,
        features_per_split=1, min_samples_split=2, seed=0,
    )
    report = evaluate(model, np.zeros((3, 1)), np.array([1, 0, 1]))
    assert (report.tp, report.fp, report.fn, report.tn) == (2, 1, 0, 0)
    assert report.accuracy == pytest.approx(2 / 3)
    assert report.f1 == pytest.approx(4 / 5)


# -----------------------------------------------------------------------
# Splits and model selection
# -----------------------------------------------------------------------


def test_stratified_split_sizes_and_coverage():
    y = np.array([0] * 220 + [1] * 220)
    train, test = stratified_split(y, test_frac=0.2, seed=42)
    assert (train.size, test.size) == (352, 88)
    assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(440))
    assert int(y[test].sum()) == 44
    again = stratified_split(y, test_frac=0.2, seed=42)
    assert np.array_equal(train, again[0]) and np.array_equal(test, again[1])
    other = stratified_split(y, test_frac=0.2, seed=43)
    assert not np.array_equal(test, other[1])


def test_stratified_split_small_classes():
    train, test = stratified_split(np.array([0, 0, 0, 1]), test_frac=0.2)
    # A singleton class contributes nothing to the test side.
    assert 3 in train
    assert test.size == 1
    with pytest.raises(ValueError):
        stratified_split(np.array([0, 1]), test_frac=0.0)


def test_grid_search_prefers_fewer_trees_on_ties():
    rng = np.random.default_rng(6)
    X = np.concatenate([rng.normal(-4, 0.2, (20, 2)), rng.normal(4, 0.2, (20, 2))])
    y = np.array([0] * 20 + [1] * 20)
    best, scores = grid_search(X, y, (25, 5, 10), k_folds=4, seed=1)
    assert set(scores) == {5, 10, 25}
    assert all(v == 1.0 for v in scores.values())
    assert best == 5
    with pytest.raises(ValueError):
        grid_search(X, y, (), k_folds=4)
    with pytest.raises(ValueError):
        grid_search(X, y, (5,), k_folds=1)
    with pytest.raises(ValueError):
        grid_search(X, np.array([0] * 39 + [1]), (5,), k_folds=4)
