from .networks import (
    forward,
    init_discriminator,
    init_params,
    layout_for,
    penultimate,
    zero_discriminator,
    zero_params,
)
from .prediction import (
    accuracy,
    confidence,
    discriminator_probability,
    hard_labels,
    predict,
    prediction_from_logits,
    sharpen,
)
from .training import (
    discriminator_loss,
    fit_targets,
    mean_cross_entropy,
    train_discriminator,
    train_supervised,
    weighted_batch_loss,
)

__all__ = (
    "accuracy",
    "confidence",
    "discriminator_loss",
    "discriminator_probability",
    "fit_targets",
    "forward",
    "hard_labels",
    "init_discriminator",
    "init_params",
    "layout_for",
    "mean_cross_entropy",
    "penultimate",
    "predict",
    "prediction_from_logits",
    "sharpen",
    "train_discriminator",
    "train_supervised",
    "weighted_batch_loss",
    "zero_discriminator",
    "zero_params",
)
