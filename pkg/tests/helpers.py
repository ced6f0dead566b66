"""Shared test oracles, independent of the implementation paths they check."""

from __future__ import annotations

import numpy as np

from uqclf import mlp


def jacobi_eigh(A: np.ndarray, sweeps: int = 200, tol: float = 1e-14):
    """Cyclic Jacobi rotation eigensolver for symmetric matrices.

    Deliberately avoids numpy.linalg so it can serve as an independent
    oracle. Returns (eigenvalues, eigenvectors-as-columns), unsorted.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                if theta == 0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0))
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    return np.diag(A).copy(), V


def random_tiny_net(vocab, hidden=(3, 2), d=4, dropout_rate=0.4, seed=7):
    """Small net with randomized biases so no pre-activation sits on a ReLU kink."""
    rng = np.random.default_rng(seed)
    sizes = [d, *hidden, vocab.count]
    W = [rng.normal(0, np.sqrt(2 / a), size=(a, b)) for a, b in zip(sizes, sizes[1:])]
    B = [rng.normal(0, 0.3, size=b) for b in sizes[1:]]
    return mlp.MlpModel(tuple(W), tuple(B), dropout_rate, vocab)


def kink_margin(model, X, mask_sets) -> float:
    """Smallest |pre-activation| across all passes; FD checks need this > h."""
    margin = np.inf
    for masks in mask_sets:
        _, (_, pre) = mlp._forward_batch(model.weights, model.biases, X, masks)
        margin = min(margin, min(float(np.abs(z).min()) for z in pre))
    return margin


def finite_difference_worst_error(model, X, y, config, ce_masks, pe_masks, h=1e-5):
    """Max relative error between analytic gradients and central differences."""
    _, (gw, gb) = mlp.loss_and_grads_with_masks(model, X, y, config, ce_masks, pe_masks)

    def loss_at(W, B):
        probe = mlp.MlpModel(tuple(W), tuple(B), model.dropout_rate, model.vocab)
        return mlp.loss_and_grads_with_masks(probe, X, y, config, ce_masks, pe_masks)[0]

    worst = 0.0
    for layer in range(len(model.weights)):
        for kind, grads in (("W", gw), ("b", gb)):
            base = model.weights[layer] if kind == "W" else model.biases[layer]
            it = np.nditer(base, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                W = [w.copy() for w in model.weights]
                B = [b.copy() for b in model.biases]
                target = W[layer] if kind == "W" else B[layer]
                target[idx] += h
                f_plus = loss_at(W, B)
                target[idx] -= 2 * h
                f_minus = loss_at(W, B)
                numeric = (f_plus - f_minus) / (2 * h)
                analytic = grads[layer][idx]
                denom = max(abs(numeric), abs(analytic))
                if denom >= 1e-10:
                    worst = max(worst, abs(numeric - analytic) / denom)
    return worst


def entropy_of(probs) -> float:
    p = np.asarray(probs, dtype=np.float64)
    mask = p > 0
    return float(-(p[mask] * np.log(p[mask])).sum())


def two_class_probs_for_normalized_entropy(target: float) -> np.ndarray:
    """Invert H(p)/ln 2 = target by bisection on the majority probability."""
    lo, hi = 0.5, 1.0 - 1e-15
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        h = entropy_of([mid, 1 - mid]) / np.log(2)
        if h > target:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    return np.array([p, 1 - p])
