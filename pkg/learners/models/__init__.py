from .params import ClassifierParams, DiscriminatorParams, Prediction
from .specs import ACTIVATIONS, ClassifierSpec, DiscriminatorSpec, OptimizerConfig

__all__ = (
    "ACTIVATIONS",
    "ClassifierParams",
    "ClassifierSpec",
    "DiscriminatorParams",
    "DiscriminatorSpec",
    "OptimizerConfig",
    "Prediction",
)
