"""Vector algebra on the unit hypersphere.

Identity embeddings live on the unit sphere in R^D. This module provides
the primitive operations everything else is built from: normalization,
cosine similarity and distance, negation, spherical linear interpolation,
spherical means, and construction of anchor sets by interpolating a list
of mean embeddings against a shifted copy of itself.

Values are held as read-only float64 arrays regardless of how the caller
supplied them, so results do not depend on input dtype.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AntipodalPair,
    DimensionMismatch,
    EmptyList,
    NotUnitNorm,
    TooFewMeans,
    ZeroVector,
)

__all__ = [
    "UNIT_NORM_TOL",
    "Embedding",
    "AnchorProvenance",
    "SkippedPair",
    "AnchorSet",
    "normalize",
    "cosine",
    "cosine_distance",
    "negate",
    "slerp",
    "mean_embedding",
    "build_anchor_set",
]

# Norm tolerance for treating a vector as unit length. Matches the
# precision loss of a single-precision file round trip.
UNIT_NORM_TOL = 1e-6

# Below this norm a vector has no usable direction.
_ZERO_NORM_TOL = 1e-12

# cos(a, b) <= -1 + this means the pair is antipodal for slerp purposes.
_ANTIPODAL_TOL = 1e-6

# cos(a, b) >= 1 - this means the arc is too short for the sine formula;
# fall back to linear interpolation, which is exact in the limit.
_PARALLEL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Embedding:
    """A D-dimensional identity vector.

    Construction does not force unit norm: rows read raw from files stay
    inspectable as-is. Every spherical operation checks the unit-norm
    invariant on entry and raises :class:`NotUnitNorm` when it is violated,
    so unnormalized data cannot silently flow through the algebra.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise DimensionMismatch(
                f"embedding must be a 1-D vector of length >= 2, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    @property
    def is_unit(self) -> bool:
        return abs(self.norm - 1.0) <= UNIT_NORM_TOL

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None  # mutable-array semantics: not hashable

    def __repr__(self) -> str:
        head = np.array2string(self.values[:4], precision=4, separator=", ")
        tail = ", ..." if self.dim > 4 else ""
        return f"Embedding(dim={self.dim}, values={head[:-1]}{tail}])"


def _require_unit(e: Embedding, name: str = "embedding") -> None:
    if not e.is_unit:
        raise NotUnitNorm(
            f"{name} has norm {e.norm:.8f}, expected 1 within {UNIT_NORM_TOL:g}"
        )


def _require_same_dim(a: Embedding, b: Embedding) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")


def normalize(vector: Iterable[float] | np.ndarray) -> Embedding:
    """Project a raw vector onto the unit sphere.

    Args:
        vector: any 1-D sequence of reals with length >= 2.

    Returns:
        An :class:`Embedding` pointing the same way with norm 1.

    Raises:
        DimensionMismatch: if the input is not 1-D or shorter than 2.
        ZeroVector: if the norm is below 1e-12, leaving no direction.
    """
    arr = np.asarray(vector, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise DimensionMismatch(
            f"cannot normalize input of shape {arr.shape}; need a 1-D vector of length >= 2"
        )
    norm = float(np.linalg.norm(arr))
    if not math.isfinite(norm) or norm <= _ZERO_NORM_TOL:
        raise ZeroVector(f"cannot normalize vector with norm {norm:g}")
    return Embedding(arr / norm)


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity of two unit embeddings, clamped to [-1, 1]."""
    _require_same_dim(a, b)
    _require_unit(a, "first embedding")
    _require_unit(b, "second embedding")
    return float(np.clip(np.dot(a.values, b.values), -1.0, 1.0))


def cosine_distance(a: Embedding, b: Embedding) -> float:
    """Cosine distance 1 - cos(a, b), in [0, 2]."""
    return 1.0 - cosine(a, b)


def negate(z: Embedding) -> Embedding:
    """The antipodal embedding -z. Involutive bit-for-bit."""
    _require_unit(z)
    return Embedding(np.negative(z.values))


def slerp(a: Embedding, b: Embedding, t: float) -> Embedding:
    """Spherical linear interpolation between two unit embeddings.

    Walks the great-circle arc from ``a`` (t = 0) to ``b`` (t = 1) at
    constant angular speed and re-normalizes the result so accumulated
    rounding cannot drift off the sphere.

    Args:
        a: start embedding, unit norm.
        b: end embedding, unit norm, same dimension.
        t: interpolation parameter in [0, 1].

    Raises:
        AntipodalPair: if cos(a, b) <= -1 + 1e-6; the arc midpoint is
            undefined for opposite vectors.
        ValueError: if ``t`` is outside [0, 1].
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter must be in [0, 1], got {t}")
    c = cosine(a, b)
    if c <= -1.0 + _ANTIPODAL_TOL:
        raise AntipodalPair(
            f"cannot interpolate antipodal embeddings (cosine {c:.8f})"
        )
    if c >= 1.0 - _PARALLEL_TOL:
        # Arc length ~ 0: the sine formula degenerates, the chord does not.
        return normalize((1.0 - t) * a.values + t * b.values)
    omega = math.acos(c)
    sin_omega = math.sin(omega)
    mixed = (
        math.sin((1.0 - t) * omega) * a.values + math.sin(t * omega) * b.values
    ) / sin_omega
    return normalize(mixed)


def mean_embedding(members: Sequence[Embedding]) -> Embedding:
    """Normalized arithmetic mean of a non-empty list of unit embeddings.

    Raises:
        EmptyList: if ``members`` is empty.
        DimensionMismatch: if dimensions disagree.
        ZeroVector: if the members cancel out (mean norm <= 1e-12).
    """
    members = list(members)
    if not members:
        raise EmptyList("cannot average an empty list of embeddings")
    first = members[0]
    for i, m in enumerate(members):
        if m.dim != first.dim:
            raise DimensionMismatch(
                f"member {i} has dimension {m.dim}, expected {first.dim}"
            )
        _require_unit(m, f"member {i}")
    stacked = np.stack([m.values for m in members])
    return normalize(stacked.mean(axis=0))


@dataclass(frozen=True)
class AnchorProvenance:
    """Where one anchor came from: generation round, source pair, and t.

    Source indices refer to the input means for round 1 and to the previous
    round's output for later rounds.
    """

    round_index: int
    source_a: int
    source_b: int
    t: float


@dataclass(frozen=True)
class SkippedPair:
    """A source pair skipped during anchor construction for being antipodal."""

    round_index: int
    source_a: int
    source_b: int


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """An ordered collection of unit anchors available for sampling.

    ``provenance`` is populated by :func:`build_anchor_set`; anchor sets
    loaded back from plain embedding files carry ``None`` because the file
    format does not store construction history.
    """

    anchors: tuple[Embedding, ...]
    provenance: tuple[AnchorProvenance, ...] | None = None
    rounds: int = 0
    skipped: tuple[SkippedPair, ...] = ()

    def __post_init__(self) -> None:
        anchors = tuple(self.anchors)
        object.__setattr__(self, "anchors", anchors)
        if self.provenance is not None:
            prov = tuple(self.provenance)
            object.__setattr__(self, "provenance", prov)
            if len(prov) != len(anchors):
                raise DimensionMismatch(
                    f"{len(prov)} provenance records for {len(anchors)} anchors"
                )
        object.__setattr__(self, "skipped", tuple(self.skipped))
        dim = None
        for i, a in enumerate(anchors):
            if dim is None:
                dim = a.dim
            elif a.dim != dim:
                raise DimensionMismatch(
                    f"anchor {i} has dimension {a.dim}, expected {dim}"
                )
            _require_unit(a, f"anchor {i}")

    def __len__(self) -> int:
        return len(self.anchors)

    @property
    def dim(self) -> int | None:
        return self.anchors[0].dim if self.anchors else None

    @cached_property
    def matrix(self) -> np.ndarray:
        """Anchors stacked row-wise as a read-only (K, D) float64 array."""
        if not self.anchors:
            mat = np.empty((0, 0), dtype=np.float64)
        else:
            mat = np.stack([a.values for a in self.anchors])
        mat.setflags(write=False)
        return mat

    @classmethod
    def from_embeddings(cls, embeddings: Iterable[Embedding]) -> "AnchorSet":
        return cls(anchors=tuple(embeddings))


def build_anchor_set(
    means: Sequence[Embedding], rounds: int = 1, t: float = 0.5
) -> AnchorSet:
    """Build anchors by interpolating a mean list against its shifted self.

    Round 1 pairs ``means[i]`` with ``means[(i + 1) % N]`` and takes the
    slerp at ``t``. Each later round applies the same shift-and-slerp to
    the previous round's output and appends, so with no skips the final
    count is ``rounds * N``. Antipodal pairs cannot be interpolated; they
    are skipped and recorded instead of aborting the build.

    Args:
        means: at least two unit embeddings of equal dimension.
        rounds: how many generations to run (>= 1).
        t: interpolation parameter, strictly inside (0, 1).
    """
    means = list(means)
    if len(means) < 2:
        raise TooFewMeans(f"need at least 2 means to build anchors, got {len(means)}")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"interpolation parameter must be in (0, 1), got {t}")
    dim = means[0].dim
    for i, m in enumerate(means):
        if m.dim != dim:
            raise DimensionMismatch(f"mean {i} has dimension {m.dim}, expected {dim}")
        _require_unit(m, f"mean {i}")

    anchors: list[Embedding] = []
    provenance: list[AnchorProvenance] = []
    skipped: list[SkippedPair] = []
    current = means
    for round_index in range(1, rounds + 1):
        produced: list[Embedding] = []
        count = len(current)
        for i in range(count):
            j = (i + 1) % count
            try:
                anchor = slerp(current[i], current[j], t)
            except AntipodalPair:
                skipped.append(SkippedPair(round_index, i, j))
                continue
            produced.append(anchor)
            anchors.append(anchor)
            provenance.append(AnchorProvenance(round_index, i, j, t))
        current = produced
    return AnchorSet(
        anchors=tuple(anchors),
        provenance=tuple(provenance),
        rounds=rounds,
        skipped=tuple(skipped),
    )
