"""Horizontal concatenation of reduced feature spaces from multiple extractors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import FeatureTable


@dataclass(frozen=True)
class FusedTable(FeatureTable):
    """A FeatureTable whose columns are the concatenation of several sources."""

    source_dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        super().__post_init__()
        object.__setattr__(self, "source_dims", tuple(self.source_dims))
        if sum(self.source_dims) != self.d:
            raise ValueError(
                f"source_dims {self.source_dims} sum to {sum(self.source_dims)}, "
                f"but features have width {self.d}"
            )


def fuse(sources: Sequence[FeatureTable], standardize: bool = False) -> FusedTable:
    """Concatenate sources column-wise, in order.

    All sources must agree on ids and labels exactly; a permuted id order is
    an error, never a silent reorder. ``standardize`` z-scores each source's
    columns before concatenation (off by default; zero-variance columns are
    left centered).
    """
    if not sources:
        raise ValueError("fuse needs at least one source table")
    first = sources[0]
    for s, other in enumerate(sources[1:], start=1):
        if other.ids != first.ids:
            pos = next(
                (i for i, (a, b) in enumerate(zip(first.ids, other.ids)) if a != b),
                min(first.n, other.n),
            )
            raise ValueError(
                f"source {s} id sequence differs from source 0 at position {pos}"
            )
        if not np.array_equal(other.labels, first.labels):
            pos = int(np.argmax(other.labels != first.labels))
            raise ValueError(
                f"source {s} labels differ from source 0 at position {pos}"
            )

    blocks = []
    for src in sources:
        block = src.features
        if standardize:
            mu = block.mean(axis=0)
            sd = block.std(axis=0)
            block = (block - mu) / np.where(sd > 0, sd, 1.0)
        blocks.append(block)

    return FusedTable(
        ids=first.ids,
        features=np.hstack(blocks) if blocks else first.features,
        labels=first.labels,
        source_dims=tuple(src.d for src in sources),
    )
