from .pseudo_labels import PseudoLabeledSet, StepLog

__all__ = ("PseudoLabeledSet", "StepLog")
