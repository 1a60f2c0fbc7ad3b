from .embedding import DISTANCE_EPS, Embedding, PCAEmbedding, manifold_distance_ratio
from .scorers import (
    score_confidence_iterative,
    score_discriminator,
    score_manifold,
    score_progressive,
    score_random,
)

__all__ = (
    "DISTANCE_EPS",
    "Embedding",
    "PCAEmbedding",
    "manifold_distance_ratio",
    "score_confidence_iterative",
    "score_discriminator",
    "score_manifold",
    "score_progressive",
    "score_random",
)
