import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import naive_adaboost, naive_best_stump
from snnswitch.classifier import (
    MODEL_FORMAT,
    Stump,
    StumpEnsemble,
    _best_stump,
    load_model,
    model_from_dict,
    model_to_dict,
    model_to_json,
    predict,
    save_model,
    split_train_test,
    train_adaboost,
)
from snnswitch.dataset import PARALLEL, SERIAL, DatasetRow, features_matrix, labels_vector
from snnswitch.errors import ConfigError, ModelFormatError
from snnswitch.model import FeatureVector


def _rows(X, y):
    out = []
    for x, label in zip(X, y):
        s, p = (3, 2) if label > 0 else (1, 2)
        out.append(DatasetRow(FeatureVector(*map(float, x)), s, p))
    return out


def _random_rows(rng, n):
    X = np.column_stack(
        [
            rng.integers(1, 17, n),
            rng.integers(1, 11, n) * 50,
            rng.integers(1, 11, n) * 50,
            rng.integers(1, 11, n) / 10,
        ]
    )
    y = np.where((X[:, 0] < 4 * X[:, 3] + rng.normal(0, 0.5, n)) | (X[:, 1] > 450), 1, -1)
    return _rows(X, y)


def test_stump_vote():
    s = Stump(0, 8.5, -1)
    assert s.vote(np.array([[4, 1, 1, 1], [12, 1, 1, 1]])).tolist() == [1, -1]
    with pytest.raises(ConfigError):
        Stump(4, 0.0, 1)
    with pytest.raises(ConfigError):
        Stump(0, 0.0, 0)


def test_predict_single_stump():
    model = StumpEnsemble([(Stump(0, 8.5, -1), 1.0)], 1)
    assert predict(model, FeatureVector(4, 100, 100, 0.5)) == PARALLEL
    assert predict(model, FeatureVector(12, 100, 100, 0.5)) == SERIAL


def test_zero_vote_follows_tie_rule():
    model = StumpEnsemble([(Stump(0, 8.5, -1), 1.0), (Stump(0, 8.5, 1), 1.0)], 2)
    assert model.decision_function([[4, 1, 1, 1]])[0] == 0
    assert predict(model, FeatureVector(4, 100, 100, 0.5)) == PARALLEL


def test_separable_dataset_learned_in_one_round():
    X = [[d, 100, 100, 0.5] for d in range(1, 17)]
    y = [1 if d <= 3 else -1 for d in range(1, 17)]
    rows = _rows(X, y)
    model = train_adaboost(rows, n_rounds=50, test_rows=rows)
    assert len(model.stumps) == 1
    stump = model.stumps[0][0]
    assert (stump.feature_index, stump.threshold, stump.polarity) == (0, 3.5, -1)
    assert model.test_accuracy == 1.0


def test_constant_dataset_gives_constant_model():
    rows = _rows([[1, 1, 1, 1]] * 5, [-1] * 5)
    model = train_adaboost(rows)
    assert model.degenerate and model.constant == SERIAL
    assert model.predict_labels(np.ones((3, 4))) == [SERIAL] * 3
    with pytest.raises(ConfigError):
        train_adaboost(rows[:1])
    with pytest.raises(ConfigError):
        train_adaboost(rows, n_rounds=0)


def test_best_stump_matches_naive_search():
    rng = np.random.default_rng(0)
    for _ in range(20):
        rows = _random_rows(rng, 40)
        X, y = features_matrix(rows), labels_vector(rows)
        w = rng.random(40)
        bins = [np.unique(X[:, f], return_inverse=True) for f in range(4)]
        err, stump = _best_stump(bins, y, w)
        n_err, f, t, pol = naive_best_stump(X.tolist(), y.tolist(), w.tolist())
        assert err == pytest.approx(n_err)
        assert (stump.feature_index, stump.threshold, stump.polarity) == (f, t, pol)


def test_ensemble_matches_naive_adaboost():
    rng = np.random.default_rng(1)
    rows = _random_rows(rng, 60)
    X, y = features_matrix(rows), labels_vector(rows)
    model = train_adaboost(rows, n_rounds=15)
    ref = naive_adaboost(X.tolist(), y.tolist(), 15)
    assert len(model.stumps) == len(ref)
    for (s, a), (f, t, p, ra) in zip(model.stumps, ref):
        assert (s.feature_index, s.threshold, s.polarity) == (f, t, p)
        assert a == pytest.approx(ra, rel=1e-9)


def test_training_error_bound_is_nonincreasing(small_rows):
    model = train_adaboost(small_rows, n_rounds=60)
    bounds = [h["bound"] for h in model.history]
    assert all(a >= b for a, b in zip(bounds, bounds[1:]))
    assert all(h["train_error"] <= h["bound"] + 1e-12 for h in model.history)


def test_feature_scaling_invariance():
    rng = np.random.default_rng(2)
    rows = _random_rows(rng, 80)
    X = features_matrix(rows)
    scaled = [
        DatasetRow(FeatureVector(r.features.delay_range, r.features.n_source * 3.0,
                                 r.features.n_target, r.features.weight_density), r.serial_pes, r.parallel_pes)
        for r in rows
    ]
    a = train_adaboost(rows, n_rounds=20)
    b = train_adaboost(scaled, n_rounds=20)
    assert a.predict_labels(X) == b.predict_labels(features_matrix(scaled))


def test_split_sizes_and_determinism():
    rows = list(range(16000))
    train, test = split_train_test(rows, 0.8, 3)
    assert (len(train), len(test)) == (12800, 3200)
    assert sorted(train + test) == rows
    assert split_train_test(rows, 0.8, 3) == (train, test)
    assert split_train_test([1, 2], 0.5, 0)[0] in ([1], [2])
    with pytest.raises(ConfigError):
        split_train_test(rows, 1.0)


def test_model_round_trip(tmp_path, small_rows):
    model = train_adaboost(small_rows, n_rounds=40, seed=5, test_rows=small_rows[:10])
    path = tmp_path / "m.json"
    save_model(model, path)
    again = load_model(path)
    X = np.random.default_rng(0).uniform([1, 1, 1, 0.01], [16, 600, 600, 1], size=(1000, 4))
    assert np.array_equal(again.predict_codes(X), model.predict_codes(X))
    assert model_to_json(again) == model_to_json(model)
    doc = json.loads(path.read_text())
    assert set(doc) == {"rounds", "stumps", "meta"}
    assert doc["meta"]["format"] == MODEL_FORMAT


def test_training_is_deterministic(small_rows):
    a = model_to_json(train_adaboost(small_rows, n_rounds=30, seed=1))
    b = model_to_json(train_adaboost(small_rows, n_rounds=30, seed=1))
    assert a == b


def test_malformed_models_are_rejected(tmp_path, small_rows):
    doc = model_to_dict(train_adaboost(small_rows, n_rounds=3))
    broken = json.loads(json.dumps(doc))
    del broken["stumps"][0]["t"]
    with pytest.raises(ModelFormatError):
        model_from_dict(broken)
    wrong = json.loads(json.dumps(doc))
    wrong["meta"]["version"] = 99
    with pytest.raises(ModelFormatError, match="version"):
        model_from_dict(wrong)
    wrong["meta"]["version"] = 1
    wrong["meta"]["format"] = "other"
    with pytest.raises(ModelFormatError, match="format"):
        model_from_dict(wrong)
    bad = tmp_path / "bad.json"
    bad.write_text("[")
    with pytest.raises(ModelFormatError):
        load_model(bad)
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "none.json")


@given(st.lists(st.tuples(st.integers(1, 16), st.integers(1, 10), st.integers(1, 10), st.integers(1, 10)),
                min_size=4, max_size=30),
       st.integers(0, 2**16))
def test_round_trip_property(points, seed):
    rng = np.random.default_rng(seed)
    y = rng.choice([-1, 1], size=len(points))
    rows = _rows([[d, ns * 50, nt * 50, rho / 10] for d, ns, nt, rho in points], y)
    model = train_adaboost(rows, n_rounds=10, seed=seed)
    again = model_from_dict(json.loads(model_to_json(model)))
    X = features_matrix(rows)
    assert np.array_equal(again.predict_codes(X), model.predict_codes(X))
