"""Deepfake scoring by identity displacement.

A manipulated face keeps its pixels plausible but moves its identity
embedding; the cosine distance between the input and output embeddings of
a pipeline is therefore a direct fakeness score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyList
from .sphere import Embedding, cosine_distance

__all__ = [
    "DEFAULT_DETECT_THRESHOLD",
    "HISTOGRAM_BINS",
    "DetectionScore",
    "ScoreDistribution",
    "detect",
    "score_distribution",
]

# Distance above which a pair is flagged; chosen so genuine re-encodings
# of the same face land clearly below and identity swaps clearly above.
DEFAULT_DETECT_THRESHOLD = 0.6

HISTOGRAM_BINS = 40


@dataclass(frozen=True)
class DetectionScore:
    distance: float
    is_fake: bool
    threshold: float


@dataclass(frozen=True)
class ScoreDistribution:
    """Scores of a corpus plus exact summary statistics and a histogram.

    The histogram has :data:`HISTOGRAM_BINS` equal bins spanning [0, 2].
    """

    scores: tuple[float, ...]
    mean: float
    std: float
    score_min: float
    score_max: float
    histogram: tuple[int, ...]


def detect(
    z_in: Embedding, z_out: Embedding, threshold: float = DEFAULT_DETECT_THRESHOLD
) -> DetectionScore:
    """Score one input/output pair; fake means distance strictly above threshold."""
    if not 0.0 < threshold < 2.0:
        raise ValueError(f"threshold must be in (0, 2), got {threshold}")
    distance = cosine_distance(z_in, z_out)
    return DetectionScore(distance, distance > threshold, threshold)


def score_distribution(
    pairs: Sequence[tuple[Embedding, Embedding]],
) -> ScoreDistribution:
    """Distance distribution over a corpus of (input, output) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyList("need at least one embedding pair")
    scores = [cosine_distance(a, b) for a, b in pairs]
    counts, _ = np.histogram(scores, bins=HISTOGRAM_BINS, range=(0.0, 2.0))
    return ScoreDistribution(
        scores=tuple(scores),
        mean=float(np.mean(scores)),
        std=float(np.std(scores)),
        score_min=float(np.min(scores)),
        score_max=float(np.max(scores)),
        histogram=tuple(int(c) for c in counts),
    )
