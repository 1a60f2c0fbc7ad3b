from dataclasses import dataclass, replace

import numpy as np

from learners.models.specs import ClassifierSpec, DiscriminatorSpec
from numerics.models import ParamVector


@dataclass(frozen=True, eq=False)
class ClassifierParams:
    spec: ClassifierSpec
    vector: ParamVector
    training_loss: float | None = None

    def with_vector(self, vector: ParamVector, training_loss=None) -> "ClassifierParams":
        return replace(self, vector=vector, training_loss=training_loss)

    def equal(self, other: "ClassifierParams") -> bool:
        return self.spec == other.spec and self.vector.equal(other.vector)


@dataclass(frozen=True, eq=False)
class DiscriminatorParams:
    spec: DiscriminatorSpec
    vector: ParamVector
    training_loss: float | None = None

    def with_vector(self, vector: ParamVector, training_loss=None) -> "DiscriminatorParams":
        return replace(self, vector=vector, training_loss=training_loss)

    def equal(self, other: "DiscriminatorParams") -> bool:
        return self.spec == other.spec and self.vector.equal(other.vector)


@dataclass(frozen=True, eq=False)
class Prediction:
    """Logits z = f(x; theta) per example; probabilities are their row softmax."""
    logits: np.ndarray
    probabilities: np.ndarray

    def __len__(self):
        return self.logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[1]
