from .datasets import LabeledSet, ShiftStream, UnlabeledSet

__all__ = ("LabeledSet", "ShiftStream", "UnlabeledSet")
