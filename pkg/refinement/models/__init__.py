from .state import INIT_MODES, FineSequence, NextDomain, RefinementConfig, RefinementState

__all__ = ("INIT_MODES", "FineSequence", "NextDomain", "RefinementConfig", "RefinementState")
