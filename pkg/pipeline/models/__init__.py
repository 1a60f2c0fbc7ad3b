from .sequence import DomainSequence, IdolConfig, TheoryInputs

__all__ = ("DomainSequence", "IdolConfig", "TheoryInputs")
