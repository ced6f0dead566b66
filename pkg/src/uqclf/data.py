"""Feature tables, class vocabularies, stratified splits, and synthetic blobs.

This is the only module that touches persistent data files. The on-disk
format is a plain UTF-8 CSV with header ``id,label,f0,f1,...,f{d-1}``,
``\\n`` newlines, ``.`` decimal marks, and no quoting (ids and label names
must therefore not contain commas). Floats are written with 17 significant
digits so that a save/load round trip reproduces float64 values exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

# Default class names: the seven pigmented-lesion categories of HAM10000.
HAM10000_CLASSES = ("nv", "mel", "bkl", "bcc", "akiec", "vasc", "df")

_FLOAT_FMT = "%.17g"


class FeatureTableError(ValueError):
    """Raised for malformed feature-table files or inconsistent tables."""


@dataclass(frozen=True)
class ClassVocabulary:
    """Ordered, immutable list of class names; label ``i`` means ``names[i]``."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise ValueError(f"vocabulary needs at least 2 classes, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError("vocabulary names must be unique")
        for name in names:
            if not name:
                raise ValueError("vocabulary names must be non-empty")
            if "," in name:
                raise ValueError(f"vocabulary name {name!r} must not contain a comma")

    @property
    def count(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown class name {name!r}") from None


def default_vocabulary() -> ClassVocabulary:
    return ClassVocabulary(HAM10000_CLASSES)


@dataclass(frozen=True)
class FeatureTable:
    """n samples with string ids, an n-by-d float64 feature matrix, and labels.

    Labels are integer indices into some :class:`ClassVocabulary`. Instances
    are immutable (arrays are marked read-only) and safe to share.
    """

    ids: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.ids)
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise FeatureTableError(f"features must be 2-d, got shape {features.shape}")
        if labels.ndim != 1:
            raise FeatureTableError("labels must be 1-d")
        n = features.shape[0]
        if len(ids) != n or labels.shape[0] != n:
            raise FeatureTableError(
                f"length mismatch: {len(ids)} ids, {n} feature rows, {labels.shape[0]} labels"
            )
        if features.size and not np.isfinite(features).all():
            bad = np.argwhere(~np.isfinite(features))[0]
            raise FeatureTableError(
                f"non-finite feature at row {bad[0]}, column f{bad[1]}"
            )
        if labels.size and labels.min() < 0:
            raise FeatureTableError("labels must be nonnegative class indices")
        features = features.copy()
        features.setflags(write=False)
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: Sequence[int]) -> "FeatureTable":
        idx = np.asarray(rows, dtype=np.int64)
        return FeatureTable(
            ids=tuple(self.ids[i] for i in idx),
            features=self.features[idx],
            labels=self.labels[idx],
        )

    def check_labels(self, vocab: ClassVocabulary) -> None:
        if self.labels.size and self.labels.max() >= vocab.count:
            bad = int(np.argmax(self.labels >= vocab.count))
            raise FeatureTableError(
                f"label index {self.labels[bad]} at row {bad} is outside the "
                f"{vocab.count}-class vocabulary"
            )


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/test row indices covering a table exactly once."""

    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int


def load_feature_table(path: str | Path, vocab: ClassVocabulary) -> FeatureTable:
    """Load and validate a feature-table CSV.

    The column count d is inferred from the header; label names are mapped
    through ``vocab``. Malformed headers, ragged rows, non-numeric cells and
    unknown labels raise :class:`FeatureTableError` naming the offending
    row/column (rows counted from 1, header included).
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FeatureTableError(f"{path}: empty file, expected a header line")

    header = lines[0].split(",")
    d = len(header) - 2
    expected = ["id", "label"] + [f"f{j}" for j in range(max(d, 0))]
    if d < 0 or header != expected:
        raise FeatureTableError(
            f"{path}: malformed header {lines[0]!r}, expected 'id,label,f0,...'"
        )

    ids: list[str] = []
    labels: list[int] = []
    rows = np.empty((len(lines) - 1, d), dtype=np.float64)
    for r, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != d + 2:
            raise FeatureTableError(
                f"{path}: row {r} has {len(fields)} fields, expected {d + 2}"
            )
        ids.append(fields[0])
        try:
            labels.append(vocab.index_of(fields[1]))
        except KeyError:
            raise FeatureTableError(
                f"{path}: row {r} has unknown label {fields[1]!r}"
            ) from None
        for j, cell in enumerate(fields[2:]):
            try:
                rows[r - 2, j] = float(cell)
            except ValueError:
                raise FeatureTableError(
                    f"{path}: row {r}, column f{j}: non-numeric cell {cell!r}"
                ) from None

    table = FeatureTable(ids=tuple(ids), features=rows, labels=np.asarray(labels))
    table.check_labels(vocab)
    return table


def save_feature_table(table: FeatureTable, vocab: ClassVocabulary, path: str | Path) -> None:
    """Write ``table`` in the shared CSV format (bit-compatible with load)."""
    table.check_labels(vocab)
    path = Path(path)
    lines = ["id,label," + ",".join(f"f{j}" for j in range(table.d))]
    if table.d == 0:
        lines[0] = "id,label"
    for i in range(table.n):
        sid = table.ids[i]
        if "," in sid:
            raise FeatureTableError(f"id {sid!r} must not contain a comma")
        vals = ",".join(_FLOAT_FMT % v for v in table.features[i])
        name = vocab.names[table.labels[i]]
        lines.append(f"{sid},{name},{vals}" if table.d else f"{sid},{name}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def stratified_split(table: FeatureTable, test_fraction: float, seed: int) -> SplitIndices:
    """Deterministic per-class split.

    Each class present in the table is shuffled with the seeded generator and
    cut at ``round(class_count * test_fraction)`` (half-up); the rounded-off
    remainder stays in train. Every class present must have at least 2 rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")
    if table.n == 0:
        raise ValueError("cannot split an empty table")
    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    for cls in np.unique(table.labels):
        rows = np.flatnonzero(table.labels == cls)
        if rows.size < 2:
            raise ValueError(
                f"class index {int(cls)} has {rows.size} sample(s), need at least 2"
            )
        perm = rng.permutation(rows)
        n_test = math.floor(rows.size * test_fraction + 0.5)
        test.extend(int(i) for i in perm[:n_test])
        train.extend(int(i) for i in perm[n_test:])
    return SplitIndices(train=tuple(sorted(train)), test=tuple(sorted(test)), seed=seed)


def blob_centers(count: int, d: int, separation: float) -> np.ndarray:
    """Class centers with pairwise distances >= separation.

    Center i sits at ``(i+1) * separation`` along axis ``i mod d``, which keeps
    every pair at least ``separation`` apart for any d >= 1.
    """
    centers = np.zeros((count, d))
    for i in range(count):
        centers[i, i % d] = (i + 1) * separation
    return centers


def synth_blobs(
    n_per_class: int,
    d: int,
    vocab: ClassVocabulary,
    spread: float,
    separation: float,
    seed: int,
) -> FeatureTable:
    """Generate one Gaussian blob per class (stand-in for extractor embeddings).

    Rows are class-major with ids ``s0..s{n-1}``; each blob has isotropic
    standard deviation ``spread`` around its center. Deterministic given seed.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    if spread < 0:
        raise ValueError("spread must be nonnegative")
    if separation <= 0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(seed)
    centers = blob_centers(vocab.count, d, separation)
    features = np.empty((n_per_class * vocab.count, d))
    labels = np.empty(n_per_class * vocab.count, dtype=np.int64)
    for c in range(vocab.count):
        block = slice(c * n_per_class, (c + 1) * n_per_class)
        features[block] = centers[c] + rng.normal(0.0, spread, size=(n_per_class, d))
        labels[block] = c
    ids = tuple(f"s{i}" for i in range(n_per_class * vocab.count))
    return FeatureTable(ids=ids, features=features, labels=labels)
