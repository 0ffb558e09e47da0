"""Labeled embeddings and retrieval galleries."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch
from .sphere import Embedding, _require_unit

__all__ = ["LabeledEmbedding", "Gallery"]


@dataclass(frozen=True)
class LabeledEmbedding:
    """An embedding tagged with a non-empty identity label."""

    label: str
    embedding: Embedding

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("label must be non-empty")


@dataclass(frozen=True, eq=False)
class Gallery:
    """An ordered set of labeled unit embeddings with unique labels."""

    entries: tuple[LabeledEmbedding, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        seen: set[str] = set()
        dim = None
        for i, entry in enumerate(entries):
            if entry.label in seen:
                raise ValueError(f"duplicate gallery label {entry.label!r}")
            seen.add(entry.label)
            if dim is None:
                dim = entry.embedding.dim
            elif entry.embedding.dim != dim:
                raise DimensionMismatch(
                    f"entry {i} has dimension {entry.embedding.dim}, expected {dim}"
                )
            _require_unit(entry.embedding, f"gallery entry {entry.label!r}")
        self.matrix  # build the cache eagerly; entries are immutable

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return [entry.label for entry in self.entries]

    @property
    def embeddings(self) -> list[Embedding]:
        return [entry.embedding for entry in self.entries]

    @property
    def dim(self) -> int | None:
        return self.entries[0].embedding.dim if self.entries else None

    @cached_property
    def matrix(self) -> np.ndarray:
        """Entries stacked row-wise as a read-only (N, D) float64 array."""
        if not self.entries:
            mat = np.empty((0, 0), dtype=np.float64)
        else:
            mat = np.stack([entry.embedding.values for entry in self.entries])
        mat.setflags(write=False)
        return mat
