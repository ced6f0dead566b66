"""Classical classifiers with a shared probabilistic prediction interface.

Three lightweight variants: multinomial logistic regression trained by
full-batch gradient descent, k-nearest neighbors with deterministic tie
handling, and Gaussian naive Bayes computed in log space with a variance
floor. All of them expose ``predict_proba`` returning a valid distribution
so the same metric pipeline applies to every model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ClassVocabulary, FeatureTable, SplitIndices
from .mlp import softmax

VARIANCE_FLOOR = 1e-9

VARIANTS = ("logistic", "knn", "gaussian-nb")


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray  # (d, C)
    bias: np.ndarray  # (C,)
    vocab: ClassVocabulary

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(np.asarray(x, dtype=np.float64) @ self.weights + self.bias)


@dataclass(frozen=True)
class KnnModel:
    train_features: np.ndarray
    train_labels: np.ndarray
    k: int
    vocab: ClassVocabulary

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        dists = np.linalg.norm(self.train_features - np.asarray(x, dtype=np.float64), axis=1)
        # Stable sort: equal distances resolve to the lower training-row index.
        nearest = np.argsort(dists, kind="stable")[: self.k]
        votes = np.bincount(self.train_labels[nearest], minlength=self.vocab.count)
        return votes / self.k


@dataclass(frozen=True)
class GaussianNbModel:
    means: np.ndarray  # (C, d)
    variances: np.ndarray  # (C, d), floored
    log_priors: np.ndarray  # (C,)
    vocab: ClassVocabulary

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        log_lik = -0.5 * (
            np.log(2.0 * np.pi * self.variances) + (x - self.means) ** 2 / self.variances
        ).sum(axis=1)
        scores = log_lik + self.log_priors
        return softmax(scores)


BaselineModel = LogisticModel | KnnModel | GaussianNbModel


def _lipschitz_lr(X: np.ndarray, l2: float) -> float:
    # Softmax cross-entropy is L-smooth with L <= 0.5 * mean squared row norm;
    # the +1 covers the bias coordinate. Step 1/L keeps full-batch GD stable
    # at any feature scale.
    smooth = 0.5 * (float(np.mean((X * X).sum(axis=1))) + 1.0) + l2
    return 1.0 / max(smooth, 1e-12)


def fit_baseline(
    variant: str,
    table: FeatureTable,
    split: SplitIndices,
    vocab: ClassVocabulary,
    *,
    knn_k: int = 5,
    l2_penalty: float = 0.0,
    learning_rate: float | None = None,
    max_iter: int = 5000,
    tol: float = 1e-5,
) -> BaselineModel:
    """Fit one classical variant on the train rows of the split.

    Every vocabulary class must appear in the train split. Logistic runs
    full-batch gradient descent until the global gradient norm drops below
    ``tol`` or ``max_iter`` iterations elapse.
    """
    rows = np.asarray(split.train, dtype=np.int64)
    X = table.features[rows]
    y = table.labels[rows]
    counts = np.bincount(y, minlength=vocab.count)
    if counts.min() == 0:
        missing = vocab.names[int(np.argmin(counts))]
        raise ValueError(f"class {missing!r} has no samples in the train split")

    if variant == "knn":
        if not 1 <= knn_k <= len(rows):
            raise ValueError(f"knn_k must be in [1, {len(rows)}], got {knn_k}")
        return KnnModel(X.copy(), y.copy(), knn_k, vocab)

    if variant == "gaussian-nb":
        means = np.stack([X[y == c].mean(axis=0) for c in range(vocab.count)])
        variances = np.stack(
            [np.maximum(X[y == c].var(axis=0), VARIANCE_FLOOR) for c in range(vocab.count)]
        )
        log_priors = np.log(counts / len(rows))
        return GaussianNbModel(means, variances, log_priors, vocab)

    if variant == "logistic":
        C = vocab.count
        W = np.zeros((X.shape[1], C))
        b = np.zeros(C)
        Y = np.eye(C)[y]
        lr = learning_rate if learning_rate is not None else _lipschitz_lr(X, l2_penalty)
        n = len(rows)
        for _ in range(max_iter):
            P = softmax(X @ W + b)
            err = (P - Y) / n
            gw = X.T @ err + l2_penalty * W
            gb = err.sum(axis=0)
            gnorm = np.sqrt((gw * gw).sum() + (gb * gb).sum())
            if gnorm < tol:
                break
            W -= lr * gw
            b -= lr * gb
        return LogisticModel(W, b, vocab)

    raise ValueError(f"unknown baseline variant {variant!r}, expected one of {VARIANTS}")


def predict_proba(model: BaselineModel, x: np.ndarray) -> np.ndarray:
    return model.predict_proba(x)
