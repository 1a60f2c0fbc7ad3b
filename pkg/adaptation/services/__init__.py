from .self_training import (
    DEFAULT_KEEP_FRAC,
    confidence_mask,
    gradual_self_train,
    keep_count,
    pseudo_label,
    self_train,
    weighted_self_train,
)

__all__ = (
    "DEFAULT_KEEP_FRAC",
    "confidence_mask",
    "gradual_self_train",
    "keep_count",
    "pseudo_label",
    "self_train",
    "weighted_self_train",
)
