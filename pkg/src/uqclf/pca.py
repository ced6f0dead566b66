"""Principal component analysis via dense eigendecomposition.

Fits the sample covariance (divisor n-1) of the centered data and keeps the
top-k eigenvectors. When there are fewer samples than features the smaller
Gram matrix is decomposed instead and its eigenvectors converted. Components
follow a deterministic sign convention: each is flipped so its
largest-magnitude coordinate is positive, which removes the inherent sign
ambiguity from golden files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_FLOAT_FMT = "%.17g"
_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class PcaModel:
    """Column mean plus an orthonormal k-by-d projection basis.

    ``explained_variance`` holds the covariance eigenvalues (nonincreasing,
    clamped at zero); it is ``None`` for models reloaded from disk, which
    persist only the mean/components pair.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray | None

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64)
        comps = np.array(self.components, dtype=np.float64)
        if mean.ndim != 1 or comps.ndim != 2 or comps.shape[1] != mean.shape[0]:
            raise ValueError(
                f"shape mismatch: mean {mean.shape}, components {comps.shape}"
            )
        gram = comps @ comps.T
        if np.abs(gram - np.eye(comps.shape[0])).max() > _ORTHO_TOL:
            raise ValueError("component rows are not orthonormal within 1e-8")
        ev = self.explained_variance
        if ev is not None:
            ev = np.array(ev, dtype=np.float64)
            if ev.shape != (comps.shape[0],):
                raise ValueError("explained_variance length must equal k")
            if ev.size and (np.diff(ev) > 1e-12).any():
                raise ValueError("explained_variance must be nonincreasing")
            if ev.size and ev.min() < 0:
                raise ValueError("explained_variance must be nonnegative")
            ev.setflags(write=False)
        for arr in (mean, comps):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "explained_variance", ev)

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def _eigh_desc(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        evals, evecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigendecomposition failed to converge on a "
            f"{matrix.shape[0]}x{matrix.shape[1]} matrix: {exc}"
        ) from exc
    order = np.argsort(evals)[::-1]
    return evals[order], evecs[:, order]


def fit(X: np.ndarray, k: int) -> PcaModel:
    """Fit a k-component model to the rows of X.

    Requires ``n >= 2`` and ``1 <= k <= min(n-1, d)``; fails rather than pads
    when more components are requested than the sample count supports.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples to fit, got {n}")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    k_max = min(n - 1, d)
    if not 1 <= k <= k_max:
        raise ValueError(f"k={k} out of range [1, {k_max}] for a {n}x{d} matrix")

    mean = X.mean(axis=0)
    Xc = X - mean

    if n - 1 < d:
        # Gram route: decompose the n-by-n matrix and convert eigenvectors.
        evals, U = _eigh_desc(Xc @ Xc.T / (n - 1))
        top = evals[:k]
        if top.min() > 1e-12:
            comps = (Xc.T @ U[:, :k]) / np.sqrt(top * (n - 1))
            comps = comps.T
        else:
            # Rank-deficient data: the direct covariance route still yields an
            # orthonormal basis for zero-variance directions.
            evals, V = _eigh_desc(Xc.T @ Xc / (n - 1))
            comps = V[:, :k].T
    else:
        evals, V = _eigh_desc(Xc.T @ Xc / (n - 1))
        comps = V[:, :k].T

    variance = np.maximum(evals[:k], 0.0)
    return PcaModel(mean=mean, components=_fix_signs(comps), explained_variance=variance)


def transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X onto the component basis: (X - mean) @ components.T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"expected m x {model.d} input, got shape {X.shape}")
    return (X - model.mean) @ model.components.T


def inverse_transform(model: PcaModel, Z: np.ndarray) -> np.ndarray:
    """Map projections back to feature space: Z @ components + mean."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != model.k:
        raise ValueError(f"expected m x {model.k} input, got shape {Z.shape}")
    return Z @ model.components + model.mean


def save(model: PcaModel, stem: str | Path) -> tuple[Path, Path]:
    """Persist as the CSV pair ``<stem>.mean.csv`` / ``<stem>.components.csv``."""
    stem = Path(stem)
    mean_path = stem.with_name(stem.name + ".mean.csv")
    comp_path = stem.with_name(stem.name + ".components.csv")
    mean_path.write_text(",".join(_FLOAT_FMT % v for v in model.mean) + "\n", encoding="utf-8")
    lines = [",".join(_FLOAT_FMT % v for v in row) for row in model.components]
    comp_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return mean_path, comp_path


def load(stem: str | Path) -> PcaModel:
    """Reload a persisted CSV pair; explained_variance is not stored on disk."""
    stem = Path(stem)
    mean_path = stem.with_name(stem.name + ".mean.csv")
    comp_path = stem.with_name(stem.name + ".components.csv")
    mean = np.array([float(v) for v in mean_path.read_text(encoding="utf-8").strip().split(",")])
    comps = np.array(
        [
            [float(v) for v in line.split(",")]
            for line in comp_path.read_text(encoding="utf-8").strip().split("\n")
        ]
    )
    return PcaModel(mean=mean, components=comps, explained_variance=None)
