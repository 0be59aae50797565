"""Comparison classifiers and the multi-seed evaluation report."""

from dataclasses import dataclass, field

import numpy as np
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from snnswitch.classifier import split_train_test, train_adaboost
from snnswitch.dataset import features_matrix, labels_vector

MODEL_NAMES = ("adaboost", "decision_tree", "knn", "logistic_regression", "majority")


def _minmax(train_X):
    lo = train_X.min(axis=0)
    span = train_X.max(axis=0) - lo
    span[span == 0] = 1.0
    return lambda X: (X - lo) / span


def fit_logistic(X, y, lr=0.5, n_iter=2000):
    """Full-batch gradient descent on mean logistic loss; ``y`` in {-1, +1}."""
    Xb = np.hstack([X, np.ones((len(X), 1))])
    t = (y > 0).astype(np.float64)
    theta = np.zeros(Xb.shape[1])
    for _ in range(n_iter):
        p = 1.0 / (1.0 + np.exp(-(Xb @ theta)))
        theta -= lr * (Xb.T @ (p - t)) / len(t)
    return theta


def _predict_logistic(theta, X):
    z = np.hstack([X, np.ones((len(X), 1))]) @ theta
    return np.where(z > 0, 1, -1)


def fit_predict_all(train, test, seed, n_rounds=200):
    """Train every model on ``train``; return ``{name: test predictions}``."""
    Xtr, ytr = features_matrix(train), labels_vector(train)
    Xte = features_matrix(test)
    scale = _minmax(Xtr)
    preds = {}
    preds["adaboost"] = train_adaboost(train, n_rounds=n_rounds, seed=seed).predict_codes(Xte)
    tree = DecisionTreeClassifier(max_depth=6, random_state=seed).fit(Xtr, ytr)
    preds["decision_tree"] = tree.predict(Xte)
    knn = KNeighborsClassifier(n_neighbors=5).fit(scale(Xtr), ytr)
    preds["knn"] = knn.predict(scale(Xte))
    preds["logistic_regression"] = _predict_logistic(fit_logistic(scale(Xtr), ytr), scale(Xte))
    n_par = int((ytr > 0).sum())
    majority = 1 if n_par > len(ytr) - n_par else -1
    preds["majority"] = np.full(len(Xte), majority)
    return preds


def confusion(y_true, y_pred):
    """2x2 counts, rows = true (serial, parallel), columns = predicted."""
    m = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        m[int(t > 0), int(p > 0)] += 1
    return m


@dataclass
class ModelScore:
    accuracy: float
    confusion: list
    seed_accuracies: list = field(default_factory=list)

    @property
    def accuracy_min(self):
        return min(self.seed_accuracies)

    @property
    def accuracy_max(self):
        return max(self.seed_accuracies)


@dataclass
class EvalReport:
    seeds: list
    ratio: float
    models: dict

    def to_dict(self):
        return {
            "seeds": self.seeds,
            "ratio": self.ratio,
            "models": {
                name: {
                    "accuracy": s.accuracy,
                    "confusion": s.confusion,
                    "seed_accuracies": s.seed_accuracies,
                    "accuracy_min": s.accuracy_min,
                    "accuracy_max": s.accuracy_max,
                }
                for name, s in self.models.items()
            },
        }

    def table(self):
        lines = [f"{'model':<22}{'accuracy':>10}{'min':>10}{'max':>10}"]
        for name, s in self.models.items():
            lines.append(
                f"{name:<22}{s.accuracy:>10.4f}{s.accuracy_min:>10.4f}{s.accuracy_max:>10.4f}"
            )
        return "\n".join(lines)


def train_baselines(rows, seed=0, n_seeds=20, ratio=0.8, n_rounds=200) -> EvalReport:
    """Evaluate all models on ``n_seeds`` seeded splits starting at ``seed``.

    ``accuracy`` and ``confusion`` refer to the first seed's split; the
    spread covers all seeds.
    """
    seeds = [seed + i for i in range(n_seeds)]
    models = {}
    for s in seeds:
        train, test = split_train_test(rows, ratio, s)
        y_te = labels_vector(test)
        for name, pred in fit_predict_all(train, test, s, n_rounds).items():
            cm = confusion(y_te, pred)
            acc = float(np.trace(cm) / cm.sum())
            if name not in models:
                models[name] = ModelScore(acc, cm.tolist())
            models[name].seed_accuracies.append(acc)
    return EvalReport(seeds, ratio, {n: models[n] for n in MODEL_NAMES})
