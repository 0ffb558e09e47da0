"""Anonymization quality metrics: retrieval rates, temporal consistency, losses.

Retrieval success means the nearest gallery entry carries the probe's true
label AND sits within the distance threshold; the inverted variant negates
the probe first to measure how much of the original identity survives in
a trivially-reversible form.

Temporal consistency summarizes, per video, the full N x N pairwise
cosine-distance matrix of its frame embeddings (diagonal included) by its
mean and population standard deviation, then averages both across videos.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyGallery, EmptyList, ShapeMismatch
from .gallery import Gallery, LabeledEmbedding
from .sphere import Embedding, _require_unit, cosine, negate
from .util import parallel_map

__all__ = [
    "VideoConsistency",
    "TemporalReport",
    "ProbeOutcome",
    "RetrievalReport",
    "pairwise_distance_matrix",
    "temporal_consistency",
    "retrieve",
    "id_retrieval_rate",
    "neg_id_retrieval_rate",
    "anti_id_loss",
    "id_loss",
    "recon_l1",
]


@dataclass(frozen=True)
class VideoConsistency:
    """Mean and population std of one video's pairwise distance matrix."""

    mean_distance: float
    std_distance: float


@dataclass(frozen=True)
class TemporalReport:
    """Per-video consistency plus the across-video averages of both stats."""

    mean_of_means: float
    mean_of_stds: float
    per_video: tuple[VideoConsistency, ...]


@dataclass(frozen=True)
class ProbeOutcome:
    """One probe's retrieval result."""

    true_label: str
    retrieved_label: str
    distance: float
    success: bool


@dataclass(frozen=True)
class RetrievalReport:
    """Success rate over all probes at a fixed distance threshold."""

    success_rate: float
    threshold: float
    per_query: tuple[ProbeOutcome, ...]


def _check_frames(frames: Sequence[Embedding]) -> np.ndarray:
    if not frames:
        raise EmptyList("a video needs at least one frame embedding")
    dim = frames[0].dim
    for i, frame in enumerate(frames):
        if frame.dim != dim:
            raise DimensionMismatch(
                f"frame {i} has dimension {frame.dim}, expected {dim}"
            )
        _require_unit(frame, f"frame {i}")
    return np.stack([f.values for f in frames])


def pairwise_distance_matrix(frames: Sequence[Embedding]) -> np.ndarray:
    """All-pairs cosine distances of a frame list as an (N, N) array.

    For unit vectors 1 - cos(a, b) equals |a - b|^2 / 2, which is what is
    computed here: it is exactly symmetric, exactly zero for identical
    frames, and never dips below zero, so downstream statistics are clean.
    """
    stacked = _check_frames(list(frames))
    n = stacked.shape[0]
    distances = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        diff = stacked - stacked[i]
        distances[i] = 0.5 * (diff * diff).sum(axis=1)
    np.clip(distances, 0.0, 2.0, out=distances)
    return distances


def _video_consistency(frames: Sequence[Embedding]) -> VideoConsistency:
    distances = pairwise_distance_matrix(frames)
    mean = float(distances.mean())
    std = float(np.sqrt(np.mean((distances - mean) ** 2)))
    return VideoConsistency(mean, std)


def temporal_consistency(
    videos: Sequence[Sequence[Embedding]], threads: int = 1
) -> TemporalReport:
    """Consistency statistics for a list of videos (lists of frames)."""
    videos = list(videos)
    if not videos:
        raise EmptyList("need at least one video")
    per_video = parallel_map(_video_consistency, videos, threads)
    mean_of_means = float(np.mean([v.mean_distance for v in per_video]))
    mean_of_stds = float(np.mean([v.std_distance for v in per_video]))
    return TemporalReport(mean_of_means, mean_of_stds, tuple(per_video))


def retrieve(query: Embedding, gallery: Gallery) -> tuple[str, float]:
    """Nearest gallery entry by cosine distance; ties go to the lowest index."""
    if len(gallery) == 0:
        raise EmptyGallery("cannot retrieve from an empty gallery")
    if gallery.dim != query.dim:
        raise DimensionMismatch(
            f"query has dimension {query.dim}, gallery has {gallery.dim}"
        )
    _require_unit(query, "query embedding")
    similarities = np.clip(gallery.matrix @ query.values, -1.0, 1.0)
    distances = 1.0 - similarities
    index = int(np.argmin(distances))
    return gallery.entries[index].label, float(distances[index])


def _probe_pairs(
    probes: Sequence[tuple[Embedding, str] | LabeledEmbedding],
) -> list[tuple[Embedding, str]]:
    pairs = []
    for probe in probes:
        if isinstance(probe, LabeledEmbedding):
            pairs.append((probe.embedding, probe.label))
        else:
            embedding, label = probe
            pairs.append((embedding, label))
    return pairs


def id_retrieval_rate(
    probes: Sequence[tuple[Embedding, str] | LabeledEmbedding],
    gallery: Gallery,
    threshold: float,
    threads: int = 1,
) -> RetrievalReport:
    """Fraction of probes whose nearest entry is their own label in range.

    A retrieval at exactly the threshold distance still counts as success.
    """
    pairs = _probe_pairs(probes)
    if not pairs:
        raise EmptyList("need at least one probe")
    if not 0.0 <= threshold <= 2.0:
        raise ValueError(f"threshold must be in [0, 2], got {threshold}")

    def _one(pair: tuple[Embedding, str]) -> ProbeOutcome:
        embedding, true_label = pair
        retrieved, distance = retrieve(embedding, gallery)
        success = retrieved == true_label and distance <= threshold
        return ProbeOutcome(true_label, retrieved, distance, success)

    outcomes = parallel_map(_one, pairs, threads)
    rate = sum(1 for o in outcomes if o.success) / len(outcomes)
    return RetrievalReport(rate, threshold, tuple(outcomes))


def neg_id_retrieval_rate(
    probes: Sequence[tuple[Embedding, str] | LabeledEmbedding],
    gallery: Gallery,
    threshold: float,
    threads: int = 1,
) -> RetrievalReport:
    """Retrieval rate after negating each probe first.

    Measures whether the original identity is recoverable from a fake by
    the cheapest possible inversion.
    """
    pairs = _probe_pairs(probes)
    negated = [(negate(embedding), label) for embedding, label in pairs]
    return id_retrieval_rate(negated, gallery, threshold, threads)


def anti_id_loss(z_target: Embedding, z_anchor: Embedding, z_blend: Embedding) -> float:
    """2 + cos(target, anchor) + cos(target, blend); 0 when both are antipodal."""
    return 2.0 + cosine(z_target, z_anchor) + cosine(z_target, z_blend)


def id_loss(a: Embedding, b: Embedding) -> float:
    """Identity dissimilarity 1 - cos(a, b), in [0, 2]."""
    return 1.0 - cosine(a, b)


def recon_l1(x: np.ndarray, y: np.ndarray) -> float:
    """Mean absolute elementwise difference of two same-shape arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"shape {x.shape} vs {y.shape}")
    if x.size == 0:
        raise EmptyList("cannot average over zero elements")
    return float(np.mean(np.abs(x - y)))
