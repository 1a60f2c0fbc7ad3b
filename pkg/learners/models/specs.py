from dataclasses import dataclass

from utils.exceptions import ContractException

ACTIVATIONS = ("relu", "tanh", "softplus")


@dataclass(frozen=True)
class ClassifierSpec:
    """Fully connected classifier; empty hidden_dims is multinomial logistic regression."""
    input_dim: int
    num_classes: int
    hidden_dims: tuple = (32,)
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.num_classes < 2:
            raise ContractException(f"num_classes must be >= 2, got {self.num_classes}")
        if self.input_dim < 1:
            raise ContractException(f"input_dim must be >= 1, got {self.input_dim}")
        if any(h < 1 for h in self.hidden_dims):
            raise ContractException(f"hidden_dims entries must be >= 1, got {self.hidden_dims}")
        if self.activation not in ACTIVATIONS:
            raise ContractException(f"unknown activation {self.activation!r}, expected one of {ACTIVATIONS}")

    @property
    def output_dim(self) -> int:
        return self.num_classes


@dataclass(frozen=True)
class DiscriminatorSpec:
    """Same topology as the classifier with a single logit head."""
    input_dim: int
    hidden_dims: tuple = (32,)
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1:
            raise ContractException(f"input_dim must be >= 1, got {self.input_dim}")
        if any(h < 1 for h in self.hidden_dims):
            raise ContractException(f"hidden_dims entries must be >= 1, got {self.hidden_dims}")
        if self.activation not in ACTIVATIONS:
            raise ContractException(f"unknown activation {self.activation!r}, expected one of {ACTIVATIONS}")

    @property
    def output_dim(self) -> int:
        return 1


@dataclass(frozen=True)
class OptimizerConfig:
    """Plain mini-batch SGD with a fixed learning rate."""
    lr: float = 0.1
    epochs: int = 20
    batch_size: int = 128
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr < 0:
            raise ContractException(f"lr must be >= 0, got {self.lr}")
        if self.epochs < 0:
            raise ContractException(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ContractException(f"batch_size must be >= 1, got {self.batch_size}")
        if self.weight_decay < 0:
            raise ContractException(f"weight_decay must be >= 0, got {self.weight_decay}")
