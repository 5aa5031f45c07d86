"""Feature assembly: candidate embedding plus a path-consistency scalar.

Consistency is the mean cosine similarity between a candidate's embedding
and the embeddings along its root-to-parent path.  An empty ancestor list
yields the neutral value 1.0, and zero vectors are rejected rather than
silently coerced.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .core import FeatureVector, ReasoningState


def _as_vector(x: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clipped into [-1, 1]."""
    va = _as_vector(a, "a")
    vb = _as_vector(b, "b")
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.clip(float(va @ vb) / (na * nb), -1.0, 1.0))


def consistency_score(
    embedding: np.ndarray,
    ancestor_embeddings: Sequence[np.ndarray] | Iterable[np.ndarray],
) -> float:
    """Mean cosine similarity to the ancestors; 1.0 when there are none."""
    ancestors = list(ancestor_embeddings)
    if not ancestors:
        return 1.0
    sims = [cosine_similarity(embedding, anc) for anc in ancestors]
    return float(sum(sims) / len(sims))


def assemble_features(embedding: np.ndarray, consistency: float) -> np.ndarray:
    """Concatenate embedding and consistency into the predictor input."""
    v = _as_vector(embedding, "embedding")
    c = float(consistency)
    if not -1.0 <= c <= 1.0:
        raise ValueError(f"consistency must lie in [-1, 1], got {c}")
    return np.concatenate([v, [c]])


def ancestor_embeddings(
    parent: ReasoningState, include_root: bool = True
) -> list[np.ndarray]:
    """Embeddings along the root-to-``parent`` path, root first."""
    chain = parent.chain()
    if not include_root:
        chain = chain[1:]
    return [node.features.embedding for node in chain]


def candidate_features(
    embedding: np.ndarray,
    parent: ReasoningState,
    include_root: bool = True,
) -> FeatureVector:
    """Feature vector for a candidate generated from ``parent``."""
    c = consistency_score(embedding, ancestor_embeddings(parent, include_root))
    return FeatureVector(embedding, c)
