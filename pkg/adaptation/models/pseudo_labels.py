from dataclasses import dataclass

import numpy as np

from streams.models import LabeledSet, UnlabeledSet
from utils.exceptions import ContractException


@dataclass(frozen=True, eq=False)
class PseudoLabeledSet:
    """
    Pool examples with one-hot targets taken from a frozen teacher.

    kept_mask marks the examples that survived the confidence filter; training
    only ever uses those.
    """
    features: np.ndarray
    pseudo_labels: np.ndarray
    kept_mask: np.ndarray
    teacher_confidence: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        n = len(self.features)
        one_hot = np.asarray(self.pseudo_labels, dtype=np.int64)
        if one_hot.ndim != 2 or one_hot.shape[0] != n:
            raise ContractException("pseudo_labels must have one row per example")
        if n and not (np.all((one_hot == 0) | (one_hot == 1)) and np.all(one_hot.sum(axis=1) == 1)):
            raise ContractException("pseudo_labels must be one-hot rows")
        kept = np.asarray(self.kept_mask, dtype=bool)
        conf = np.asarray(self.teacher_confidence, dtype=np.float64)
        if kept.shape != (n,) or conf.shape != (n,):
            raise ContractException("kept_mask and teacher_confidence must have one entry per example")
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "pseudo_labels", one_hot)
        object.__setattr__(self, "kept_mask", kept)
        object.__setattr__(self, "teacher_confidence", conf)
        object.__setattr__(self, "ids", np.arange(n) if self.ids is None else np.asarray(self.ids, dtype=np.int64))

    def __len__(self):
        return len(self.features)

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.pseudo_labels, axis=1)

    @property
    def num_kept(self) -> int:
        return int(self.kept_mask.sum())

    def kept(self) -> LabeledSet:
        return LabeledSet(self.features[self.kept_mask], self.labels[self.kept_mask], self.ids[self.kept_mask])

    def unlabeled(self) -> UnlabeledSet:
        return UnlabeledSet(self.features, self.ids)

    @classmethod
    def from_labeled(cls, labeled: LabeledSet, num_classes: int) -> "PseudoLabeledSet":
        """Anchor set built from true labels (the labeled source)."""
        one_hot = np.zeros((len(labeled), num_classes), dtype=np.int64)
        one_hot[np.arange(len(labeled)), labeled.labels] = 1
        return cls(
            features=labeled.features,
            pseudo_labels=one_hot,
            kept_mask=np.ones(len(labeled), dtype=bool),
            teacher_confidence=np.ones(len(labeled)),
            ids=labeled.ids,
        )


@dataclass(frozen=True)
class StepLog:
    """One gradual self-training step."""
    step: int
    domain_index: int
    size: int
    kept: int
    target_accuracy: float | None = None
    training_loss: float | None = None
