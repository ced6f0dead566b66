"""Dropout MLP with analytic gradients and an entropy-regularized batch loss.

The network is a fully connected d -> 64 -> 16 -> C stack (widths
configurable) with ReLU hidden activations, inverted dropout after each
hidden layer, and a softmax output. The training objective is mean batch
cross-entropy, optionally plus the mean per-sample predictive entropy of the
average over several stochastic forward passes. Gradients are exact
derivatives of that total objective, flowing through every pass and through
the entropy term itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import ClassVocabulary

LOG_CLAMP = 1e-12  # floor inside every log to avoid -inf

_FLOAT_FMT = "%.17g"


@dataclass
class TrainConfig:
    """Knobs for one training run; everything defaulted here is recorded upstream."""

    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    pe_loss_enabled: bool = False
    pe_train_passes: int = 5
    optimizer: str = "adam"  # "adam" or "sgd"

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.pe_train_passes < 1:
            raise ValueError("pe_train_passes must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class MlpModel:
    """Layer weights/biases plus the dropout rate and class vocabulary.

    ``weights[i]`` has shape (fan_in, fan_out); layers chain so that each
    fan_in equals the previous fan_out. Instances are immutable; training
    returns a new model.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    dropout_rate: float
    vocab: ClassVocabulary
    loss_history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        # Copy before freezing so callers' arrays are never mutated in place.
        weights = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        biases = tuple(np.array(b, dtype=np.float64) for b in self.biases)
        if len(weights) != len(biases) or not weights:
            raise ValueError("weights and biases must be nonempty and paired")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: input width does not chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameters")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if weights[-1].shape[1] != self.vocab.count:
            raise ValueError("output width must equal the vocabulary size")
        for arr in (*weights, *biases):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "loss_history", tuple(self.loss_history))

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.weights[:-1])

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def init(
    d: int,
    vocab: ClassVocabulary,
    dropout_rate: float = 0.3,
    seed: int = 0,
    hidden: Sequence[int] = (64, 16),
) -> MlpModel:
    """He-initialized model: weights ~ N(0, 2/fan_in), biases zero."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    sizes = [d, *hidden, vocab.count]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(weights), tuple(biases), dropout_rate, vocab)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def draw_mask(rng: np.random.Generator, dropout_rate: float, widths: Sequence[int]):
    """One inverted-dropout keep vector per hidden layer: entries 0 or 1/(1-p)."""
    return [
        (rng.random(w) >= dropout_rate) / (1.0 - dropout_rate) for w in widths
    ]


def _draw_batch_masks(rng, dropout_rate, widths, batch_size):
    return [
        (rng.random((batch_size, w)) >= dropout_rate) / (1.0 - dropout_rate)
        for w in widths
    ]


def _forward_batch(model_w, model_b, X, masks):
    """Run the stack on a batch; returns softmax outputs plus backprop caches."""
    acts = [X]  # post-dropout input of each layer
    pre = []  # pre-activation of each hidden layer
    a = X
    n_hidden = len(model_w) - 1
    for i in range(n_hidden):
        z = a @ model_w[i] + model_b[i]
        h = np.maximum(z, 0.0)
        if masks is not None:
            h = h * masks[i]
        pre.append(z)
        acts.append(h)
        a = h
    logits = a @ model_w[-1] + model_b[-1]
    probs = softmax(logits)
    return probs, (acts, pre)


def _backward_batch(model_w, masks, cache, d_logits):
    """Exact gradients for every weight/bias given d(loss)/d(logits)."""
    acts, pre = cache
    grads_w = [None] * len(model_w)
    grads_b = [None] * len(model_w)
    dz = d_logits
    for i in range(len(model_w) - 1, -1, -1):
        grads_w[i] = acts[i].T @ dz
        grads_b[i] = dz.sum(axis=0)
        if i == 0:
            break
        dh = dz @ model_w[i].T
        if masks is not None:
            dh = dh * masks[i - 1]
        dz = dh * (pre[i - 1] > 0)
    return grads_w, grads_b


def forward(model: MlpModel, x: np.ndarray, mask=None) -> np.ndarray:
    """Single-sample class distribution; dropout applied iff a mask is given."""
    x = np.asarray(x, dtype=np.float64)
    batch_mask = None if mask is None else [m[None, :] for m in mask]
    probs, _ = _forward_batch(model.weights, model.biases, x[None, :], batch_mask)
    return probs[0]


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-log p[label], with the probability floored at the log clamp."""
    return float(-np.log(max(float(probs[label]), LOG_CLAMP)))


def predictive_entropy(mean_probs: np.ndarray) -> float:
    """Entropy of an aggregated class distribution, with 0 log 0 := 0."""
    p = np.asarray(mean_probs, dtype=np.float64)
    return float(-(p * np.log(np.maximum(p, LOG_CLAMP))).sum())


def _entropy_grad(mu: np.ndarray) -> np.ndarray:
    # d/d mu of -mu * log(max(mu, clamp)); below the clamp the log is constant.
    clamped = np.maximum(mu, LOG_CLAMP)
    return -(np.log(clamped) + (mu > LOG_CLAMP))


def loss_and_grads_with_masks(
    model: MlpModel,
    X: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    ce_masks,
    pe_masks,
):
    """Batch objective and exact gradients under externally fixed dropout masks.

    ``ce_masks`` is one per-layer mask set for the cross-entropy pass;
    ``pe_masks`` is a list of per-layer mask sets, one per stochastic pass.
    Fixing the masks makes the objective a smooth function of the parameters,
    which is what finite-difference checks require.
    """
    return _loss_and_grads(model.weights, model.biases, X, labels, config, ce_masks, pe_masks)


def _loss_and_grads(W, Bs, X, labels, config, ce_masks, pe_masks):
    B = X.shape[0]

    probs, cache = _forward_batch(W, Bs, X, ce_masks)
    p_label = probs[np.arange(B), labels]
    loss = float(np.mean(-np.log(np.maximum(p_label, LOG_CLAMP))))

    d_logits = probs.copy()
    d_logits[np.arange(B), labels] -= 1.0
    d_logits /= B
    # Rows where the clamp is active have zero derivative through the log.
    d_logits[p_label <= LOG_CLAMP] = 0.0
    grads_w, grads_b = _backward_batch(W, ce_masks, cache, d_logits)

    if config.pe_loss_enabled:
        T = config.pe_train_passes
        pass_probs = []
        pass_caches = []
        for t in range(T):
            pt, ct = _forward_batch(W, Bs, X, pe_masks[t])
            pass_probs.append(pt)
            pass_caches.append(ct)
        mu = np.mean(pass_probs, axis=0)
        pe = -(mu * np.log(np.maximum(mu, LOG_CLAMP))).sum(axis=1)
        loss += float(pe.mean())

        v = _entropy_grad(mu) / (B * T)
        for t in range(T):
            pt = pass_probs[t]
            dz = pt * (v - (pt * v).sum(axis=1, keepdims=True))
            gw, gb = _backward_batch(W, pe_masks[t], pass_caches[t], dz)
            for i in range(len(W)):
                grads_w[i] += gw[i]
                grads_b[i] += gb[i]

    return loss, (grads_w, grads_b)


def pe_batch_loss(model: MlpModel, batch, config: TrainConfig, rng: np.random.Generator):
    """Objective for one mini-batch with freshly drawn per-sample masks.

    ``batch`` is a list of (feature vector, label) pairs. Returns
    (loss, (weight gradients, bias gradients)).
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    X = np.asarray([x for x, _ in batch], dtype=np.float64)
    labels = np.asarray([y for _, y in batch], dtype=np.int64)
    widths = model.hidden_widths
    B = X.shape[0]
    ce_masks = _draw_batch_masks(rng, model.dropout_rate, widths, B)
    pe_masks = None
    if config.pe_loss_enabled:
        pe_masks = [
            _draw_batch_masks(rng, model.dropout_rate, widths, B)
            for _ in range(config.pe_train_passes)
        ]
    return loss_and_grads_with_masks(model, X, labels, config, ce_masks, pe_masks)


def train(model: MlpModel, table, split, config: TrainConfig) -> MlpModel:
    """Mini-batch training over the split's train rows; returns a new model.

    Deterministic for a fixed (model, table, split, config). Aborts with the
    epoch/batch location if the loss or any parameter goes non-finite.
    """
    rows = np.asarray(split.train, dtype=np.int64)
    X = table.features[rows]
    y = table.labels[rows]
    if X.shape[1] != model.layer_sizes[0]:
        raise ValueError(
            f"feature width {X.shape[1]} does not match model input {model.layer_sizes[0]}"
        )
    if config.epochs == 0:
        return MlpModel(
            model.weights, model.biases, model.dropout_rate, model.vocab, loss_history=()
        )

    W = [w.copy() for w in model.weights]
    Bs = [b.copy() for b in model.biases]
    rng = np.random.default_rng(config.seed)
    widths = model.hidden_widths

    adam_m = [np.zeros_like(p) for p in (*W, *Bs)]
    adam_v = [np.zeros_like(p) for p in (*W, *Bs)]
    step = 0
    history = []

    for epoch in range(config.epochs):
        order = rng.permutation(len(rows))
        epoch_losses = []
        for start in range(0, len(rows), config.batch_size):
            sel = order[start : start + config.batch_size]
            Xb, yb = X[sel], y[sel]
            ce_masks = _draw_batch_masks(rng, model.dropout_rate, widths, len(sel))
            pe_masks = None
            if config.pe_loss_enabled:
                pe_masks = [
                    _draw_batch_masks(rng, model.dropout_rate, widths, len(sel))
                    for _ in range(config.pe_train_passes)
                ]
            loss, (gw, gb) = _loss_and_grads(W, Bs, Xb, yb, config, ce_masks, pe_masks)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            params = [*W, *Bs]
            grads = [*gw, *gb]
            if config.optimizer == "adam":
                step += 1
                for i, (p, g) in enumerate(zip(params, grads)):
                    adam_m[i] = 0.9 * adam_m[i] + 0.1 * g
                    adam_v[i] = 0.999 * adam_v[i] + 0.001 * g * g
                    m_hat = adam_m[i] / (1.0 - 0.9**step)
                    v_hat = adam_v[i] / (1.0 - 0.999**step)
                    p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
            else:
                for p, g in zip(params, grads):
                    p -= config.learning_rate * g
            for i, p in enumerate(params):
                if not np.isfinite(p).all():
                    raise RuntimeError(
                        f"non-finite parameter {i} at epoch {epoch}, "
                        f"batch {start // config.batch_size}"
                    )
            epoch_losses.append(loss)
        history.append(float(np.mean(epoch_losses)))

    return MlpModel(
        tuple(W), tuple(Bs), model.dropout_rate, model.vocab, loss_history=tuple(history)
    )


def save_checkpoint(model: MlpModel, directory: str | Path) -> None:
    """Write a CSV-per-tensor checkpoint plus a small JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "layer_sizes": list(model.layer_sizes),
        "dropout_rate": model.dropout_rate,
        "classes": list(model.vocab.names),
        "loss_history": list(model.loss_history),
    }
    (directory / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines = [",".join(_FLOAT_FMT % v for v in row) for row in w]
        (directory / f"W{i}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (directory / f"b{i}.csv").write_text(
            ",".join(_FLOAT_FMT % v for v in b) + "\n", encoding="utf-8"
        )


def load_checkpoint(directory: str | Path) -> MlpModel:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    vocab = ClassVocabulary(tuple(manifest["classes"]))
    sizes = manifest["layer_sizes"]
    weights = []
    biases = []
    for i in range(len(sizes) - 1):
        w = np.array(
            [
                [float(v) for v in line.split(",")]
                for line in (directory / f"W{i}.csv").read_text(encoding="utf-8").strip().split("\n")
            ]
        )
        b = np.array(
            [float(v) for v in (directory / f"b{i}.csv").read_text(encoding="utf-8").strip().split(",")]
        )
        weights.append(w)
        biases.append(b)
    return MlpModel(
        tuple(weights),
        tuple(biases),
        float(manifest["dropout_rate"]),
        vocab,
        loss_history=tuple(manifest.get("loss_history", ())),
    )
