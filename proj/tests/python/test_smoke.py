import json
import math

import numpy as np
import pytest

import srlmlp


def test_cosine():
    assert srlmlp.cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(1 / math.sqrt(2))
    assert srlmlp.cosine(np.zeros(2), np.ones(2)) == 0.0
    with pytest.raises(Exception):
        srlmlp.cosine(np.ones(2), np.ones(3))


def test_stratified_kfold():
    labels = [1] * 5 + [0] * 5
    folds = srlmlp.stratified_kfold(labels, 5, 3)
    assert sorted(i for f in folds for i in f) == list(range(10))
    for f in folds:
        assert sorted(labels[i] for i in f) == [0, 1]
    with pytest.raises(srlmlp.ConfigError):
        srlmlp.stratified_kfold(labels, 1, 3)
    with pytest.raises(srlmlp.DataError):
        srlmlp.stratified_kfold([0, 0, 0, 1], 2, 3)


def test_smote_balances():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 3))
    y = [1 if i < 8 else 0 for i in range(30)]
    out, labels = srlmlp.smote(x, y, k=3, seed=2)
    assert out.shape == (44, 3)
    assert labels.count(1) == 22
    np.testing.assert_array_equal(out[:30], x)
    with pytest.raises(ValueError):
        srlmlp.smote(x, y, k=8)


def test_select_source():
    source = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.2]])
    targets = np.array([[1.0, 0.0], [2.0, 0.0]])
    kept, scores = srlmlp.select_source(source, targets, 0.5)
    assert kept == [0, 2]
    assert scores[0] == pytest.approx(1.0)
    assert srlmlp.select_source(source[1:2], targets, 0.5)[0] == []


def test_train_skipgram_shapes():
    sentences = [["a", "b", "c", "a"], ["b", "c", "d"]] * 5
    tokens, vectors = srlmlp.train_skipgram(sentences, dimension=6, min_count=1, epochs=2)
    assert vectors.shape == (len(tokens), 6)
    assert set(tokens) == {"a", "b", "c", "d"}


def test_positive_bias_errors():
    assert 0 < srlmlp.positive_bias(0.6, 0.25, 6) < 0.5
    with pytest.raises(srlmlp.ConfigError):
        srlmlp.positive_bias(1.5, 0.25, 6)


def test_synth_and_evaluate(tmp_path):
    n_users, n_reviews, _ = srlmlp.synth_data(tmp_path, users=60, reviews=120, seed=4)
    assert (n_users, n_reviews) == (60, 120)
    config = {"folds": 3, "epochs": [2], "seed": 5}
    args = dict(stopwords=tmp_path / "stopwords.txt", r=20, dimension=8, seed=5)
    a = srlmlp.evaluate(config, tmp_path / "users.jsonl", tmp_path / "reviews.jsonl", **args)
    b = srlmlp.evaluate(config, tmp_path / "users.jsonl", tmp_path / "reviews.jsonl", **args)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert len(a["folds"]) == 3
    assert 0.0 <= a["mean"][0] <= 1.0
    with pytest.raises(srlmlp.DataError):
        srlmlp.evaluate(config, tmp_path / "missing.jsonl", tmp_path / "reviews.jsonl", **args)
    with pytest.raises(srlmlp.ConfigError):
        srlmlp.evaluate({"folds": 1}, tmp_path / "users.jsonl", tmp_path / "reviews.jsonl", **args)
