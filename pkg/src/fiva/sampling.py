"""Fake-identity sampling from an anchor set.

Given a real identity embedding z and a margin m, the sampler picks the
anchor minimizing |cos(z, anchor) + m|, i.e. the anchor whose similarity
to z is closest to the target value -m. A margin of 0 therefore finds the
anchor most orthogonal to z, which is simultaneously far from z and from
its negation -z, so neither the identity nor its trivial inverse leaks
into the fake.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyAnchorSet
from .sphere import AnchorSet, Embedding, _require_unit

__all__ = ["SampleResult", "sample_fake", "sample_far"]


@dataclass(frozen=True)
class SampleResult:
    """Outcome of one sampling call."""

    anchor_index: int
    fake_identity: Embedding
    achieved_cosine: float


def sample_fake(z_id: Embedding, anchors: AnchorSet, m: float = 0.0) -> SampleResult:
    """Select the anchor whose cosine to ``z_id`` is closest to ``-m``.

    Ties are broken toward the lowest anchor index, so the result is a
    pure function of its inputs.

    Args:
        z_id: the identity to anonymize, unit norm.
        anchors: non-empty anchor set of matching dimension.
        m: margin in [-1, 1]; the sampler targets cosine ``-m``.

    Raises:
        EmptyAnchorSet: if the anchor set has no anchors.
        DimensionMismatch: if dimensions disagree.
    """
    if len(anchors) == 0:
        raise EmptyAnchorSet("cannot sample from an empty anchor set")
    if not -1.0 <= m <= 1.0:
        raise ValueError(f"margin must be in [-1, 1], got {m}")
    _require_unit(z_id, "query embedding")
    if anchors.dim != z_id.dim:
        raise DimensionMismatch(
            f"query has dimension {z_id.dim}, anchors have {anchors.dim}"
        )
    similarities = np.clip(anchors.matrix @ z_id.values, -1.0, 1.0)
    index = int(np.argmin(np.abs(similarities + m)))
    return SampleResult(
        anchor_index=index,
        fake_identity=anchors.anchors[index],
        achieved_cosine=float(similarities[index]),
    )


def sample_far(
    z_id: Embedding, anchors: AnchorSet, far_margin: float = 0.0
) -> SampleResult:
    """Sampling preset for swap-style backends that need distant targets.

    Identical to :func:`sample_fake`; the separate name marks call sites
    that want anchors far from the source identity rather than near some
    similarity level, with the orthogonal point as the default target.
    """
    return sample_fake(z_id, anchors, far_margin)
