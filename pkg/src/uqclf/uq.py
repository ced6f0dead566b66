"""Uncertainty inference engines: MC dropout, deep ensembles, and their hybrid.

All three produce a :class:`PredictionRecord` holding the aggregated class
distribution, its predictive entropy, and optionally every per-pass
distribution for density dumps. Mask streams are derived as
``default_rng([seed, member_index])``, with a lone model occupying member
slot 0; this makes single-model MC dropout bit-identical to a one-member
hybrid run under the same seed, and the hybrid with dropout disabled
bit-identical to the plain ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ClassVocabulary
from .mlp import MlpModel, draw_mask, forward, predictive_entropy

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class PredictionRecord:
    """Aggregated prediction for one sample.

    ``entropy`` always equals ``predictive_entropy(mean_probs)`` and
    ``predicted`` is the argmax with ties resolved to the lowest index.
    ``pass_probs`` (T-by-C), when kept, holds the individual distributions
    whose mean is ``mean_probs``.
    """

    sample_id: str
    mean_probs: np.ndarray
    entropy: float
    predicted: int
    true_label: int
    pass_probs: np.ndarray | None = None

    def __post_init__(self) -> None:
        p = np.asarray(self.mean_probs, dtype=np.float64)
        if abs(float(p.sum()) - 1.0) > 1e-9 or p.min() < 0:
            raise ValueError("mean_probs is not a valid distribution")
        if abs(self.entropy - predictive_entropy(p)) > 1e-9:
            raise ValueError("entropy is inconsistent with mean_probs")
        if self.predicted != int(np.argmax(p)):
            raise ValueError("predicted must be the argmax of mean_probs")

    @property
    def normalized_entropy(self) -> float:
        # Entropy never exceeds log C mathematically; clip away float noise.
        return min(self.entropy / math.log(len(self.mean_probs)), 1.0)

    @property
    def correct(self) -> bool:
        return self.predicted == self.true_label


@dataclass(frozen=True)
class EnsembleSet:
    """Independently trained models sharing one architecture and vocabulary."""

    members: tuple[MlpModel, ...]

    def __post_init__(self) -> None:
        members = tuple(self.members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        sizes = members[0].layer_sizes
        vocab = members[0].vocab
        for i, m in enumerate(members[1:], start=1):
            if m.layer_sizes != sizes:
                raise ValueError(f"member {i} architecture {m.layer_sizes} != {sizes}")
            if m.vocab != vocab:
                raise ValueError(f"member {i} has a different vocabulary")
        object.__setattr__(self, "members", members)

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def vocab(self) -> ClassVocabulary:
        return self.members[0].vocab


def _record(sample_id, mean, true_label, passes):
    return PredictionRecord(
        sample_id=sample_id,
        mean_probs=mean,
        entropy=predictive_entropy(mean),
        predicted=int(np.argmax(mean)),
        true_label=true_label,
        pass_probs=passes,
    )


def _masked_pass_mean(model: MlpModel, x, T: int, rng, keep_passes: bool):
    """Mean over T dropout passes; a zero rate collapses to one pass exactly."""
    if model.dropout_rate == 0.0:
        probs = forward(model, x)
        passes = np.tile(probs, (T, 1)) if keep_passes else None
        return probs, passes
    stack = np.empty((T, model.vocab.count))
    for t in range(T):
        mask = draw_mask(rng, model.dropout_rate, model.hidden_widths)
        stack[t] = forward(model, x, mask)
    return stack.mean(axis=0), (stack if keep_passes else None)


def mcd_predict(
    model: MlpModel,
    x: np.ndarray,
    T: int,
    seed: int,
    *,
    sample_id: str = "",
    true_label: int = -1,
    keep_passes: bool = False,
) -> PredictionRecord:
    """Average of T stochastic dropout passes, entropy of that average."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng([seed, 0])
    mean, passes = _masked_pass_mean(model, x, T, rng, keep_passes)
    return _record(sample_id, mean, true_label, passes)


def ensemble_predict(
    ensemble: EnsembleSet,
    x: np.ndarray,
    *,
    sample_id: str = "",
    true_label: int = -1,
    keep_passes: bool = False,
) -> PredictionRecord:
    """Each member evaluated deterministically (dropout off), then averaged."""
    stack = np.stack([forward(m, x) for m in ensemble.members])
    mean = np.mean(stack, axis=0)
    return _record(sample_id, mean, true_label, stack if keep_passes else None)


def emcd_predict(
    ensemble: EnsembleSet,
    x: np.ndarray,
    T: int,
    seed: int,
    *,
    sample_id: str = "",
    true_label: int = -1,
    keep_passes: bool = False,
) -> PredictionRecord:
    """Per-member dropout-pass means, then the mean over members.

    Member i draws its masks from ``default_rng([seed, i])``. With
    ``keep_passes`` the record holds all N*T pass distributions, grouped
    member-major.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    member_means = []
    all_passes = [] if keep_passes else None
    for i, member in enumerate(ensemble.members):
        rng = np.random.default_rng([seed, i])
        mean, passes = _masked_pass_mean(member, x, T, rng, keep_passes)
        member_means.append(mean)
        if keep_passes:
            all_passes.append(passes)
    final = np.mean(np.stack(member_means), axis=0)
    passes = np.vstack(all_passes) if keep_passes else None
    return _record(sample_id, final, true_label, passes)


def flag_certainty(
    records: list[PredictionRecord], threshold: float
) -> list[tuple[PredictionRecord, bool]]:
    """Certain iff normalized entropy (PE / log C) is <= threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    return [(r, r.normalized_entropy <= threshold) for r in records]


def write_pass_dump(
    records: list[PredictionRecord], vocab: ClassVocabulary, path: str | Path
) -> None:
    """Dump raw per-pass distributions: one row per (sample, pass, class).

    Records without retained passes contribute their mean distribution as a
    single pass 0.
    """
    path = Path(path)
    lines = ["id,pass,class,prob"]
    for rec in records:
        passes = rec.pass_probs if rec.pass_probs is not None else rec.mean_probs[None, :]
        for t in range(passes.shape[0]):
            for c in range(passes.shape[1]):
                lines.append(f"{rec.sample_id},{t},{vocab.names[c]},{_FLOAT_FMT % passes[t, c]}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pass_dump(path: str | Path) -> dict[str, np.ndarray]:
    """Reassemble per-sample pass matrices from a dump written by this module."""
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    if lines[0] != "id,pass,class,prob":
        raise ValueError(f"{path}: unexpected header {lines[0]!r}")
    cells: dict[str, dict[tuple[int, str], float]] = {}
    class_order: list[str] = []
    for line in lines[1:]:
        sid, t, cls, prob = line.split(",")
        cells.setdefault(sid, {})[(int(t), cls)] = float(prob)
        if cls not in class_order:
            class_order.append(cls)
    out = {}
    for sid, vals in cells.items():
        n_pass = max(t for t, _ in vals) + 1
        mat = np.empty((n_pass, len(class_order)))
        for (t, cls), p in vals.items():
            mat[t, class_order.index(cls)] = p
        out[sid] = mat
    return out
