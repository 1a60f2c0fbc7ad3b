import logging
import math
from collections.abc import Sequence

import numpy as np

from adaptation.models import PseudoLabeledSet, StepLog
from learners.models import ClassifierParams, OptimizerConfig
from learners.services import accuracy, confidence, fit_targets, predict, sharpen
from streams.models import LabeledSet, UnlabeledSet
from utils.exceptions import ContractException

logger = logging.getLogger(__name__)

DEFAULT_KEEP_FRAC = 0.9


# =========================================================
# PSEUDO-LABELS & CONFIDENCE FILTER
# =========================================================

def keep_count(n: int, keep_frac: float) -> int:
    if not 0 < keep_frac <= 1:
        raise ContractException(f"keep_frac must be in (0, 1], got {keep_frac}")
    # rounding first keeps 0.9 * 10 at 9 instead of ceil(9.000000000000002)
    return min(n, math.ceil(round(keep_frac * n, 9)))


def confidence_mask(teacher_confidence: np.ndarray, keep_frac: float) -> np.ndarray:
    """Keep the ceil(keep_frac * n) most confident examples; ties go to the lower index."""
    n = len(teacher_confidence)
    order = np.lexsort((np.arange(n), -teacher_confidence))
    mask = np.zeros(n, dtype=bool)
    mask[order[:keep_count(n, keep_frac)]] = True
    return mask


def pseudo_label(teacher: ClassifierParams, pool: UnlabeledSet, keep_frac: float = 1.0) -> PseudoLabeledSet:
    """Sharpened predictions of the frozen teacher, with the confidence filter applied."""
    if len(pool) == 0:
        raise ContractException("cannot pseudo-label an empty pool")
    pred = predict(teacher, pool.features)
    teacher_confidence = confidence(pred)
    return PseudoLabeledSet(
        features=pool.features,
        pseudo_labels=sharpen(pred),
        kept_mask=confidence_mask(teacher_confidence, keep_frac),
        teacher_confidence=teacher_confidence,
        ids=pool.ids,
    )


# =========================================================
# SELF-TRAINING
# =========================================================

def self_train(
    teacher: ClassifierParams,
    pool: UnlabeledSet,
    keep_frac: float,
    opt: OptimizerConfig,
    seed: int,
) -> ClassifierParams:
    """
    Pseudo-label the pool once with the frozen teacher, drop the least
    confident examples, then train a student initialised at the teacher.
    """
    labeled = pseudo_label(teacher, pool, keep_frac)
    if labeled.num_kept == 0:
        raise ContractException(f"keep_frac={keep_frac} leaves no examples out of {len(pool)}")

    kept = labeled.kept()
    student = fit_targets(teacher, kept.features, kept.labels, opt, seed)
    logger.debug(f"Self-trained on {labeled.num_kept}/{len(pool)} examples", extra={"seed": seed})
    return student


def weighted_self_train(
    teacher: ClassifierParams,
    pool: UnlabeledSet,
    q,
    opt: OptimizerConfig,
    seed: int,
) -> ClassifierParams:
    """Self-training where example i's loss is scaled by q_i; no confidence filter."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (len(pool),):
        raise ContractException(f"{q.shape[0] if q.ndim else 0} weights for a pool of {len(pool)}")
    if np.any(q < 0):
        raise ContractException("weights must be non-negative")

    labeled = pseudo_label(teacher, pool, keep_frac=1.0)
    return fit_targets(teacher, labeled.features, labeled.labels, opt, seed, weights=q)


# =========================================================
# GRADUAL SELF-TRAINING
# =========================================================

def gradual_self_train(
    source_params: ClassifierParams,
    domains: Sequence[UnlabeledSet],
    target: UnlabeledSet,
    keep_frac: float,
    opt: OptimizerConfig,
    seed: int,
    evaluation: LabeledSet | None = None,
) -> tuple[ClassifierParams, list]:
    """
    Fold self_train left to right over (U_1, ..., U_{M-1}, T).

    Step m uses seed + m. When `evaluation` (the labeled target) is given, the
    target accuracy after each step is logged; it never influences training.
    """
    chain = [*domains, target]
    params = source_params
    log = []

    for m, pool in enumerate(chain):
        params = self_train(params, pool, keep_frac, opt, seed + m)
        kept = keep_count(len(pool), keep_frac)

        target_accuracy = accuracy(params, evaluation) if evaluation is not None else None
        log.append(StepLog(
            step=m + 1,
            domain_index=m,
            size=len(pool),
            kept=kept,
            target_accuracy=target_accuracy,
            training_loss=params.training_loss,
        ))
        logger.info(
            f"Gradual step {m + 1}/{len(chain)} n={len(pool)} kept={kept} acc={target_accuracy}",
            extra={"seed": seed, "step": m + 1},
        )

    return params, log
