import logging

import numpy as np

from adaptation.services import gradual_self_train
from learners.models import ClassifierParams, ClassifierSpec, DiscriminatorSpec, OptimizerConfig
from learners.services import train_discriminator, train_supervised
from pipeline.models import DomainSequence, IdolConfig
from refinement.services import refine_sequence
from scoring.models import ScoredPool, ScorerChoice
from scoring.services import (
    score_confidence_iterative,
    score_discriminator,
    score_manifold,
    score_progressive,
    score_random,
)
from streams.models import LabeledSet, UnlabeledSet
from utils.chunking import chunk_sizes
from utils.exceptions import ContractException

logger = logging.getLogger(__name__)


# =========================================================
# CHUNKING
# =========================================================

def _split(order: np.ndarray, num_domains: int) -> tuple:
    bounds = np.cumsum(chunk_sizes(len(order), num_domains))[:-1]
    return tuple(np.split(order, bounds))


def sort_and_chunk(scored: ScoredPool, num_domains: int, method_tag: str | None = None) -> DomainSequence:
    """Scores descending (ties by position), cut into num_domains chunks; the remainder joins the last one."""
    return DomainSequence(
        chunks=_split(scored.order(), num_domains),
        pool_size=len(scored),
        method_tag=scored.scorer_id if method_tag is None else method_tag,
    )


def sequence_from_index(index_values, num_domains: int, method_tag: str = "predefined") -> DomainSequence:
    """Sequence ordered by a known domain index (smallest first), e.g. the true rotation angle."""
    index_values = np.asarray(index_values, dtype=np.float64)
    order = np.argsort(index_values, kind="stable")
    return DomainSequence(chunks=_split(order, num_domains), pool_size=len(index_values), method_tag=method_tag)


def order_domains_by_score(scored: ScoredPool, domain_of) -> DomainSequence:
    """
    Keep given domains intact and order them by mean score, highest first.
    Equal means keep the smaller domain label first.
    """
    domain_of = np.asarray(domain_of)
    if domain_of.shape != (len(scored),):
        raise ContractException(f"{domain_of.size} domain labels for a pool of {len(scored)}")
    labels = np.unique(domain_of)
    means = np.array([scored.scores[domain_of == label].mean() for label in labels])
    ranked = labels[np.lexsort((np.arange(len(labels)), -means))]
    return DomainSequence(
        chunks=tuple(np.flatnonzero(domain_of == label) for label in ranked),
        pool_size=len(scored),
        method_tag=f"{scored.scorer_id}_domains",
    )


# =========================================================
# IDOL
# =========================================================

def coarse_scores(
    source: LabeledSet,
    target: UnlabeledSet,
    pool: UnlabeledSet,
    config: IdolConfig,
    seed: int,
    source_params: ClassifierParams,
) -> ScoredPool:
    scorer = config.scorer
    if scorer is ScorerChoice.CONFIDENCE:
        return score_confidence_iterative(source_params, pool, config.M, config.self_train_opt, seed)
    if scorer is ScorerChoice.MANIFOLD:
        return score_manifold(source_params, source.unlabeled(), target, pool, embed_dim=config.embed_dim)
    if scorer is ScorerChoice.RANDOM:
        return score_random(pool, seed)

    spec = DiscriminatorSpec(input_dim=pool.dim, hidden_dims=config.discriminator_hidden)
    if scorer is ScorerChoice.DISCRIMINATOR:
        phi = train_discriminator(source.unlabeled(), target, config.discriminator_opt, seed=seed, spec=spec)
        return score_discriminator(phi, pool)

    rounds = config.rounds or 2 * config.M
    if 2 * rounds > len(pool):
        logger.warning(f"Progressive scoring: {rounds} rounds need {2 * rounds} examples, using {len(pool) // 2}")
        rounds = max(len(pool) // 2, 1)
    return score_progressive(source.unlabeled(), target, pool, rounds, config.discriminator_opt, seed, spec=spec)


def idol(
    source: LabeledSet,
    target: UnlabeledSet,
    pool: UnlabeledSet,
    config: IdolConfig,
    seed: int,
    source_params: ClassifierParams | None = None,
    source_opt: OptimizerConfig | None = None,
) -> DomainSequence:
    """
    Coarse scoring, then either sort-and-chunk or greedy refinement of the
    coarse order. source_params is trained here when not supplied.
    """
    if len(source) == 0 or len(target) == 0 or len(pool) == 0:
        raise ContractException("idol needs non-empty source, target and pool")
    if config.num_domains > len(pool):
        raise ContractException(f"cannot split a pool of {len(pool)} into {config.num_domains} domains")

    if config.num_domains == 1:
        logger.info("One intermediate domain requested: the whole pool is the sequence", extra={"seed": seed})
        return DomainSequence(chunks=(np.arange(len(pool)),), pool_size=len(pool), method_tag=config.method_tag)

    if source_params is None:
        spec = ClassifierSpec(input_dim=source.dim, num_classes=int(source.labels.max()) + 1)
        source_params = train_supervised(spec, source, source_opt or OptimizerConfig(), seed)

    scored = coarse_scores(source, target, pool, config, seed, source_params)
    logger.info(f"Coarse scores from {scored.scorer_id} over {len(pool)} examples", extra={"seed": seed})
    if not config.refine:
        return sort_and_chunk(scored, config.num_domains, method_tag=config.method_tag)

    fine = refine_sequence(
        source,
        source_params,
        pool,
        scored.order(),
        config.M,
        config.refinement,
        seed,
        coarse_scores=scored.scores,
    )
    return DomainSequence(
        chunks=tuple(fine.chunks),
        pool_size=len(pool),
        method_tag=config.method_tag,
        cycle_losses=tuple(fine.cycle_losses),
    )


# =========================================================
# GRADUAL ADAPTATION ALONG A SEQUENCE
# =========================================================

def run_gradual(
    source_params: ClassifierParams,
    sequence: DomainSequence,
    pool: UnlabeledSet,
    target: UnlabeledSet,
    keep_frac: float,
    opt: OptimizerConfig,
    seed: int,
    evaluation: LabeledSet | None = None,
):
    return gradual_self_train(
        source_params, sequence.materialize(pool), target, keep_frac, opt, seed, evaluation=evaluation
    )
