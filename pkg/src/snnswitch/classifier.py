"""Discrete two-class AdaBoost over single-feature threshold stumps.

Labels are encoded +1 = parallel, -1 = serial. A stump votes +1 when
``polarity * (x[feature] - threshold) > 0``.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from snnswitch.dataset import LABELS, PARALLEL, SERIAL, features_matrix, labels_vector
from snnswitch.errors import ConfigError, ModelFormatError
from snnswitch.model import FeatureVector

MODEL_FORMAT = "snnswitch.adaboost-stumps"
MODEL_VERSION = 1
N_FEATURES = 4
# Paradigm returned on an exactly balanced vote; matches the dataset tie rule.
TIE_LABEL = PARALLEL
_MIN_EPS = 1e-10


@dataclass(frozen=True)
class Stump:
    feature_index: int
    threshold: float
    polarity: int

    def __post_init__(self):
        if not 0 <= self.feature_index < N_FEATURES:
            raise ConfigError(f"feature_index must be in [0, {N_FEATURES - 1}]")
        if self.polarity not in (-1, 1):
            raise ConfigError("polarity must be +1 or -1")

    def vote(self, X):
        X = np.atleast_2d(X)
        return np.where(self.polarity * (X[:, self.feature_index] - self.threshold) > 0, 1, -1)


@dataclass
class StumpEnsemble:
    stumps: list
    n_rounds: int
    train_accuracy: float = float("nan")
    test_accuracy: float = float("nan")
    constant: Optional[str] = None
    seed: int = 0
    history: list = field(default_factory=list, compare=False, repr=False)

    @property
    def degenerate(self):
        return self.constant is not None

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        score = np.zeros(len(X))
        for stump, alpha in self.stumps:
            score += alpha * stump.vote(X)
        return score

    def predict_codes(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.constant is not None:
            return np.full(len(X), 1 if self.constant == PARALLEL else -1)
        score = self.decision_function(X)
        tie = 1 if TIE_LABEL == PARALLEL else -1
        return np.where(score > 0, 1, np.where(score < 0, -1, tie))

    def predict_labels(self, X):
        return [PARALLEL if c > 0 else SERIAL for c in self.predict_codes(X)]


def predict(model: StumpEnsemble, x: FeatureVector) -> str:
    return model.predict_labels(x.as_array())[0]


def _best_stump(bins, y, w):
    """Exhaustive weighted-error minimizer over features, midpoints and polarity.

    Ties resolve to the lowest feature index, then lowest threshold, then
    polarity +1.
    """
    best = None
    total = w.sum()
    for f, (uniq, inv) in enumerate(bins):
        if len(uniq) < 2:
            continue
        pos = np.bincount(inv, weights=w * (y > 0), minlength=len(uniq))
        neg = np.bincount(inv, weights=w * (y < 0), minlength=len(uniq))
        # Threshold between uniq[k] and uniq[k+1]; polarity +1 votes parallel above it.
        err_up = np.cumsum(pos)[:-1] + (neg.sum() - np.cumsum(neg)[:-1])
        errs = np.stack([err_up, total - err_up], axis=1).ravel()
        i = int(np.argmin(errs))
        if best is None or errs[i] < best[0]:
            k, which = divmod(i, 2)
            threshold = float((uniq[k] + uniq[k + 1]) / 2)
            best = (float(errs[i]), Stump(f, threshold, 1 if which == 0 else -1))
    return best


def _majority(y):
    n_par = int((y > 0).sum())
    return PARALLEL if n_par > len(y) - n_par else (SERIAL if n_par < len(y) - n_par else TIE_LABEL)


def train_adaboost(rows, n_rounds=200, seed=0, test_rows=None) -> StumpEnsemble:
    """Fit a stump ensemble; stops early once a round's error is 0 or >= 0.5.

    A single-class training set yields a constant (``degenerate``) model.
    """
    if n_rounds < 1:
        raise ConfigError("n_rounds must be >= 1")
    if len(rows) < 2:
        raise ConfigError("AdaBoost needs at least two training rows")
    X = features_matrix(rows)
    y = labels_vector(rows)
    if len(np.unique(y)) < 2:
        model = StumpEnsemble([], n_rounds, constant=_majority(y), seed=seed)
        return _score(model, X, y, test_rows)
    bins = [np.unique(X[:, f], return_inverse=True) for f in range(N_FEATURES)]
    w = np.full(len(y), 1.0 / len(y))
    score = np.zeros(len(y))
    stumps, history = [], []
    bound = 1.0
    for _ in range(n_rounds):
        found = _best_stump(bins, y, w)
        if found is None:
            break
        eps, stump = found
        eps = eps / w.sum()
        if eps >= 0.5:
            break
        clipped = max(eps, _MIN_EPS)
        alpha = 0.5 * math.log((1.0 - clipped) / clipped)
        h = stump.vote(X)
        stumps.append((stump, alpha))
        score += alpha * h
        w = w * np.exp(-alpha * y * h)
        w /= w.sum()
        bound *= 2.0 * math.sqrt(clipped * (1.0 - clipped))
        train_err = float(np.mean(np.where(score > 0, 1, -1) * y < 0))
        history.append({"eps": eps, "alpha": alpha, "train_error": train_err, "bound": bound})
        if eps <= _MIN_EPS:
            break
    if not stumps:
        model = StumpEnsemble([], n_rounds, constant=_majority(y), seed=seed)
    else:
        model = StumpEnsemble(stumps, n_rounds, seed=seed, history=history)
    return _score(model, X, y, test_rows)


def _score(model, X, y, test_rows):
    model.train_accuracy = float(np.mean(model.predict_codes(X) == y))
    if test_rows:
        model.test_accuracy = float(
            np.mean(model.predict_codes(features_matrix(test_rows)) == labels_vector(test_rows))
        )
    return model


def split_train_test(rows, ratio=0.8, seed=0):
    """Seeded shuffle, then the first ``round(ratio * n)`` rows train."""
    if not 0.0 < ratio < 1.0:
        raise ConfigError("ratio must be in (0, 1)")
    rows = list(rows)
    perm = np.random.default_rng(seed).permutation(len(rows))
    n_train = int(round(ratio * len(rows)))
    return [rows[i] for i in perm[:n_train]], [rows[i] for i in perm[n_train:]]


# --- persistence -------------------------------------------------------------


def model_to_dict(model: StumpEnsemble):
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "seed": model.seed,
        "train_accuracy": model.train_accuracy,
        "test_accuracy": model.test_accuracy,
        "constant": model.constant,
        "tie_label": TIE_LABEL,
        "features": ["delay_range", "n_source", "n_target", "density"],
    }
    return {
        "rounds": model.n_rounds,
        "stumps": [
            {"f": s.feature_index, "t": s.threshold, "p": s.polarity, "w": a}
            for s, a in model.stumps
        ],
        "meta": meta,
    }


def model_to_json(model: StumpEnsemble):
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True, allow_nan=True) + "\n"


def model_from_dict(doc) -> StumpEnsemble:
    try:
        meta = doc["meta"]
        if meta.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"unexpected model format {meta.get('format')!r}")
        if meta.get("version") != MODEL_VERSION:
            raise ModelFormatError(
                f"model version {meta.get('version')!r} does not match {MODEL_VERSION}"
            )
        stumps = []
        for s in doc["stumps"]:
            alpha = float(s["w"])
            if not math.isfinite(alpha):
                raise ModelFormatError("vote weights must be finite")
            stumps.append((Stump(int(s["f"]), float(s["t"]), int(s["p"])), alpha))
        constant = meta.get("constant")
        if constant is not None and constant not in LABELS:
            raise ModelFormatError(f"bad constant label {constant!r}")
        return StumpEnsemble(
            stumps,
            int(doc["rounds"]),
            train_accuracy=float(meta.get("train_accuracy", "nan")),
            test_accuracy=float(meta.get("test_accuracy", "nan")),
            constant=constant,
            seed=int(meta.get("seed", 0)),
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from None


def save_model(model: StumpEnsemble, path):
    Path(path).write_text(model_to_json(model))


def load_model(path) -> StumpEnsemble:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model {path} is not valid JSON: {exc}") from None
    return model_from_dict(doc)
