import logging
import math
from enum import Enum

import numpy as np

from streams.models import ShiftStream, UnlabeledSet
from streams.services.synthetic import SAMPLERS, sample_domains
from utils.exceptions import ContractException
from utils.seeding import make_rng

logger = logging.getLogger(__name__)


class PerturbMode(str, Enum):
    SUBSAMPLE = "subsample_frac"
    NOISY_INDEX = "noisy_index_frac"
    OUTLIER_EXTENSION = "outlier_extension"


def stratified_quotas(class_counts: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment of `total` over classes in proportion to their counts."""
    exact = class_counts * total / class_counts.sum()
    quotas = np.floor(exact).astype(np.int64)
    short = total - quotas.sum()
    # largest fractional part first, lower class index on ties
    order = np.lexsort((np.arange(len(exact)), -(exact - quotas)))
    quotas[order[:short]] += 1
    return quotas


def _subsample(stream: ShiftStream, frac: float, rng) -> ShiftStream:
    if not 0 < frac <= 1:
        raise ContractException(f"subsample fraction must be in (0, 1], got {frac}")
    n = len(stream.intermediate)
    if frac == 1:
        return stream

    labels = stream.intermediate_labels
    counts = np.bincount(labels, minlength=stream.num_classes)
    quotas = stratified_quotas(counts, int(math.floor(frac * n + 0.5)))
    chosen = []
    for c, quota in enumerate(quotas):
        members = np.flatnonzero(labels == c)
        chosen.append(rng.choice(members, size=quota, replace=False))
    return stream.with_intermediate(indices=np.sort(np.concatenate(chosen)))


def _noisy_index(stream: ShiftStream, frac: float, rng) -> ShiftStream:
    if not 0 <= frac <= 1:
        raise ContractException(f"noisy index fraction must be in [0, 1], got {frac}")
    truth = stream.truth_index.copy()
    if len(truth) == 0 or frac == 0:
        return stream
    picked = rng.choice(len(truth), size=int(math.floor(frac * len(truth) + 0.5)), replace=False)
    truth[picked] = rng.uniform(truth.min(), truth.max(), size=len(picked))
    return stream.with_intermediate(truth_index=truth)


def _extension_angles(lo: float, hi: float, generator: dict) -> np.ndarray:
    step = generator["total_angle"] / generator["num_domains"]
    below = np.arange(lo, 0.0, step)
    above = np.arange(hi, generator["total_angle"], -step)[::-1]
    return np.concatenate([below, above])


def _outlier_extension(stream: ShiftStream, magnitude, seed: int) -> ShiftStream:
    generator = stream.generator
    if generator.get("kind") not in SAMPLERS:
        raise ContractException(f"outlier extension needs a synthetic generator, stream has {generator.get('kind')!r}")
    try:
        lo, hi = (float(v) for v in magnitude)
    except (TypeError, ValueError) as exc:
        raise ContractException(f"outlier extension needs a (low, high) angle pair, got {magnitude!r}") from exc
    if not (lo <= 0 and hi >= generator["total_angle"] and lo < hi):
        raise ContractException(
            f"extension range ({lo}, {hi}) must contain [0, {generator['total_angle']}]"
        )

    angles = _extension_angles(lo, hi, generator)
    if len(angles) == 0:
        return stream
    features, labels = sample_domains(generator, angles, seed, key=1)

    added_X = np.vstack(features)
    added_y = np.concatenate(labels)
    start = int(stream.intermediate.ids.max()) + 1 if len(stream.intermediate) else 0
    added = UnlabeledSet(added_X, np.arange(start, start + len(added_X)))

    logger.info(f"Extended stream with {len(angles)} outlier domains over [{lo}, {hi}]")
    return stream.with_intermediate(
        pool=stream.intermediate.concat(added),
        labels=np.concatenate([stream.intermediate_labels, added_y]),
        truth_index=np.concatenate([
            stream.truth_index,
            np.repeat(angles, [len(y) for y in labels]),
        ]),
        generator={**generator, "extension": [lo, hi]},
    )


def perturb_stream(stream: ShiftStream, mode, magnitude, seed: int) -> ShiftStream:
    """
    subsample_frac: keep round(frac * N) pool examples, stratified by class.
    noisy_index_frac: replace the truth index of a fraction of the pool by uniform noise.
    outlier_extension: add generated domains out to (low, high) degrees.
    """
    mode = PerturbMode(mode)
    rng = make_rng(seed, 3)
    if mode is PerturbMode.SUBSAMPLE:
        return _subsample(stream, float(magnitude), rng)
    if mode is PerturbMode.NOISY_INDEX:
        return _noisy_index(stream, float(magnitude), rng)
    return _outlier_extension(stream, magnitude, seed)
