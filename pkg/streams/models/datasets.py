from dataclasses import dataclass, field

import numpy as np
import torch

from Idol.settings import TORCH_DTYPE
from utils.exceptions import ContractException


@dataclass(frozen=True, eq=False)
class UnlabeledSet:
    """
    Feature matrix with stable example ids and nothing else.

    Scoring and refinement only ever see this type, so they cannot read
    labels or ground-truth domain indices.
    """
    features: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ContractException(f"features must be a matrix, got {features.ndim} dimensions")
        if not np.isfinite(features).all():
            raise ContractException("features must be finite")
        ids = np.arange(len(features)) if self.ids is None else np.asarray(self.ids, dtype=np.int64)
        if ids.shape != (len(features),):
            raise ContractException(f"{len(ids)} ids for {len(features)} examples")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "ids", ids)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def tensor(self) -> torch.Tensor:
        return torch.as_tensor(self.features, dtype=TORCH_DTYPE)

    def subset(self, indices) -> "UnlabeledSet":
        indices = np.asarray(indices, dtype=np.int64)
        return UnlabeledSet(self.features[indices], self.ids[indices])

    def concat(self, other: "UnlabeledSet") -> "UnlabeledSet":
        return UnlabeledSet(
            np.vstack([self.features, other.features]),
            np.concatenate([self.ids, other.ids]),
        )


@dataclass(frozen=True, eq=False)
class LabeledSet:
    features: np.ndarray
    labels: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        base = UnlabeledSet(self.features, self.ids)
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(base),):
            raise ContractException(f"{labels.shape[0] if labels.ndim else 0} labels for {len(base)} examples")
        if len(labels) and labels.min() < 0:
            raise ContractException("labels must be non-negative class indices")
        object.__setattr__(self, "features", base.features)
        object.__setattr__(self, "ids", base.ids)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def tensor(self) -> torch.Tensor:
        return torch.as_tensor(self.features, dtype=TORCH_DTYPE)

    def label_tensor(self) -> torch.Tensor:
        return torch.as_tensor(self.labels, dtype=torch.long)

    def unlabeled(self) -> UnlabeledSet:
        return UnlabeledSet(self.features, self.ids)

    def subset(self, indices) -> "LabeledSet":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledSet(self.features[indices], self.labels[indices], self.ids[indices])

    def class_counts(self, num_classes: int) -> np.ndarray:
        return np.bincount(self.labels, minlength=num_classes)


@dataclass(frozen=True, eq=False)
class ShiftStream:
    """
    Source, intermediate pool and target drawn from one gradually shifting generator.

    intermediate_labels and truth_index are kept beside the pool, never inside it:
    they feed metrics only.
    """
    source: LabeledSet
    target: LabeledSet
    intermediate: UnlabeledSet
    intermediate_labels: np.ndarray
    truth_index: np.ndarray
    num_classes: int
    generator: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        labels = np.asarray(self.intermediate_labels, dtype=np.int64)
        truth = np.asarray(self.truth_index, dtype=np.float64)
        if labels.shape != (len(self.intermediate),) or truth.shape != (len(self.intermediate),):
            raise ContractException("intermediate labels and truth index must align with the pool")
        if self.source.dim != self.target.dim or self.source.dim != self.intermediate.dim:
            raise ContractException("source, target and pool must share a feature dimension")
        object.__setattr__(self, "intermediate_labels", labels)
        object.__setattr__(self, "truth_index", truth)

    def intermediate_labeled(self) -> LabeledSet:
        return LabeledSet(self.intermediate.features, self.intermediate_labels, self.intermediate.ids)

    def with_intermediate(self, indices=None, truth_index=None, pool=None, labels=None, generator=None):
        """Copy of the stream with the pool replaced by a subset or by new data."""
        if pool is None:
            indices = np.arange(len(self.intermediate)) if indices is None else np.asarray(indices, dtype=np.int64)
            pool = self.intermediate.subset(indices)
            labels = self.intermediate_labels[indices]
            truth = self.truth_index[indices] if truth_index is None else truth_index
        else:
            truth = truth_index
        return ShiftStream(
            source=self.source,
            target=self.target,
            intermediate=pool,
            intermediate_labels=labels,
            truth_index=truth,
            num_classes=self.num_classes,
            generator=dict(self.generator if generator is None else generator),
            seed=self.seed,
        )
