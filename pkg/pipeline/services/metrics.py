import logging

import numpy as np
from scipy.stats import pearsonr, spearmanr

from learners.models import ClassifierParams
from learners.services import accuracy
from pipeline.models import DomainSequence
from streams.models import LabeledSet
from utils.exceptions import ContractException

logger = logging.getLogger(__name__)


def _aligned_truth(sequence: DomainSequence, truth) -> np.ndarray:
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != (sequence.pool_size,):
        raise ContractException(f"{truth.size} truth values for a sequence over {sequence.pool_size} examples")
    if sequence.pool_size < 2:
        raise ContractException("correlation needs at least two examples")
    if np.all(truth == truth[0]):
        raise ContractException("truth index is constant; correlation is undefined")
    return truth


def sequence_correlation(sequence: DomainSequence, truth) -> float:
    """Spearman correlation between each example's position in the sequence and its true index."""
    truth = _aligned_truth(sequence, truth)
    return float(spearmanr(sequence.positions(), truth)[0])


def correlation_report(sequence: DomainSequence, truth) -> dict:
    truth = _aligned_truth(sequence, truth)
    positions = sequence.positions()
    return {
        "spearman": float(spearmanr(positions, truth)[0]),
        "pearson": float(pearsonr(positions, truth)[0]),
    }


def class_balance_ratio(sequence: DomainSequence, labels, num_classes: int) -> float:
    """
    Mean over chunks of max/min class counts (1.0 is perfectly balanced).
    A chunk that misses a class counts as infinity.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (sequence.pool_size,):
        raise ContractException(f"{labels.size} labels for a sequence over {sequence.pool_size} examples")

    ratios = []
    for m, chunk in enumerate(sequence.chunks):
        counts = np.bincount(labels[chunk], minlength=num_classes)
        if counts.min() == 0:
            logger.warning(
                f"Domain {m} has no examples of class(es) {np.flatnonzero(counts == 0).tolist()}",
                extra={"method": sequence.method_tag},
            )
            ratios.append(np.inf)
        else:
            ratios.append(counts.max() / counts.min())
    return float(np.mean(ratios))


def evaluate_accuracy(params: ClassifierParams, labeled: LabeledSet) -> float:
    return accuracy(params, labeled)


def assignment_variance(sequences) -> float:
    """Mean over examples of the variance of the domain number each run assigns them."""
    sequences = list(sequences)
    if not sequences:
        raise ContractException("assignment variance needs at least one sequence")
    sizes = {s.pool_size for s in sequences}
    if len(sizes) != 1:
        raise ContractException(f"sequences cover different pools: sizes {sorted(sizes)}")
    assignments = np.vstack([s.chunk_index() for s in sequences])
    return float(assignments.var(axis=0).mean())
