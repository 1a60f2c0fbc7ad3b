import logging

import numpy as np

from learners.models import ClassifierParams, DiscriminatorParams, DiscriminatorSpec, OptimizerConfig
from learners.services import (
    confidence,
    discriminator_probability,
    fit_targets,
    hard_labels,
    penultimate,
    predict,
    train_discriminator,
)
from scoring.models import ScoredPool, ScorerChoice, order_by_scores
from scoring.services.embedding import DISTANCE_EPS, Embedding, PCAEmbedding, manifold_distance_ratio
from streams.models import UnlabeledSet
from utils.chunking import chunk_sizes
from utils.exceptions import ContractException
from utils.seeding import make_rng

logger = logging.getLogger(__name__)


# =========================================================
# ITERATIVE CLASSIFIER CONFIDENCE
# =========================================================

def score_confidence_iterative(
    source_params: ClassifierParams,
    pool: UnlabeledSet,
    M: int,
    opt: OptimizerConfig,
    seed: int,
) -> ScoredPool:
    """
    M - 1 rounds: the most confident remaining chunk under the current model gets
    (M - 1 - m) / (M - 2) in round m = 1..M-1, then the model self-trains on it.
    """
    if M < 3:
        raise ContractException(f"confidence scoring needs M >= 3, got {M}")
    sizes = chunk_sizes(len(pool), M - 1)

    scores = np.zeros(len(pool))
    rounds = np.zeros(len(pool), dtype=np.int64)
    remaining = np.arange(len(pool))
    model = source_params

    for m, size in enumerate(sizes, start=1):
        pred = predict(model, pool.features[remaining])
        picked = remaining[order_by_scores(confidence(pred))[:size]]
        scores[picked] = (M - 1 - m) / (M - 2)
        rounds[picked] = m
        remaining = np.setdiff1d(remaining, picked)

        if len(remaining):
            chosen = pool.features[picked]
            model = fit_targets(model, chosen, hard_labels(predict(model, chosen)), opt, seed + m)
        logger.debug(f"Confidence round {m}/{M - 1} picked {size}", extra={"seed": seed})

    return ScoredPool(pool=pool, scores=scores, scorer_id=ScorerChoice.CONFIDENCE.value, rounds=rounds)


# =========================================================
# MANIFOLD DISTANCE
# =========================================================

def score_manifold(
    source_params: ClassifierParams,
    source: UnlabeledSet,
    target: UnlabeledSet,
    pool: UnlabeledSet,
    embed_dim: int = 2,
    embedding: Embedding | None = None,
) -> ScoredPool:
    """Distance ratio in an embedding of the source model's penultimate features."""
    if len(source) == 0 or len(target) == 0:
        raise ContractException("manifold scoring needs non-empty source and target sets")

    joint = np.vstack([source.features, target.features, pool.features])
    hidden = penultimate(source_params, joint)
    if embed_dim > hidden.shape[1]:
        raise ContractException(f"embed_dim={embed_dim} exceeds penultimate feature dim {hidden.shape[1]}")

    points = (embedding or PCAEmbedding(embed_dim)).fit_transform(hidden)
    ns, nt = len(source), len(target)
    scores = manifold_distance_ratio(points[ns + nt:], points[:ns], points[ns:ns + nt], DISTANCE_EPS)
    return ScoredPool(pool=pool, scores=scores, scorer_id=ScorerChoice.MANIFOLD.value)


# =========================================================
# DOMAIN DISCRIMINATOR
# =========================================================

def score_discriminator(phi: DiscriminatorParams, pool: UnlabeledSet) -> ScoredPool:
    """q_i = sigma(g(x_i; phi)), the probability of the source side."""
    scores = discriminator_probability(phi, pool.features) if len(pool) else np.zeros(0)
    return ScoredPool(pool=pool, scores=scores, scorer_id=ScorerChoice.DISCRIMINATOR.value)


def score_progressive(
    source: UnlabeledSet,
    target: UnlabeledSet,
    pool: UnlabeledSet,
    K: int,
    opt: OptimizerConfig,
    seed: int,
    spec: DiscriminatorSpec | None = None,
) -> ScoredPool:
    """
    K rounds of fine-tuning a source-vs-target discriminator. In round k the
    N // (2K) highest-scored remaining examples get (2K - k) / (2K) and join the
    source side, the N // (2K) lowest get k / (2K) and join the target side.
    Examples left after K rounds get 0.5.
    """
    if K < 1:
        raise ContractException(f"K must be >= 1, got {K}")
    if len(pool) < 2 * K:
        raise ContractException(f"pool of {len(pool)} is too small for {K} rounds (needs {2 * K})")
    if K == 1:
        logger.warning("Progressive scoring with K=1 scores every absorbed example 0.5; use K >= 2")

    per_side = len(pool) // (2 * K)
    scores = np.full(len(pool), 0.5)
    rounds = np.zeros(len(pool), dtype=np.int64)
    remaining = np.arange(len(pool))
    side_s, side_t = source, target
    phi = None

    for k in range(1, K + 1):
        phi = train_discriminator(side_s, side_t, opt, init=phi, seed=seed + k, spec=spec)
        ranked = remaining[order_by_scores(discriminator_probability(phi, pool.features[remaining]))]
        top, bottom = ranked[:per_side], ranked[len(ranked) - per_side:]

        scores[top] = (2 * K - k) / (2 * K)
        scores[bottom] = k / (2 * K)
        rounds[top] = k
        rounds[bottom] = k
        side_s = side_s.concat(pool.subset(top))
        side_t = side_t.concat(pool.subset(bottom))
        remaining = np.setdiff1d(remaining, np.concatenate([top, bottom]))

        logger.debug(
            f"Progressive round {k}/{K} loss={phi.training_loss:.4f} remaining={len(remaining)}",
            extra={"seed": seed},
        )

    return ScoredPool(pool=pool, scores=scores, scorer_id=ScorerChoice.PROGRESSIVE.value, rounds=rounds)


# =========================================================
# RANDOM
# =========================================================

def score_random(pool: UnlabeledSet, seed: int) -> ScoredPool:
    """Scores from a random permutation: the random coarse sequence."""
    n = len(pool)
    scores = make_rng(seed, 4).permutation(n) / max(n - 1, 1)
    return ScoredPool(pool=pool, scores=scores, scorer_id=ScorerChoice.RANDOM.value)
