from .param_vector import ParamVector
from .trace import StepLoss, TraceStep, UnrolledTrace

__all__ = ("ParamVector", "StepLoss", "TraceStep", "UnrolledTrace")
