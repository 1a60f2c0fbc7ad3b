from .cycle import cycle_loss, find_next_domain, initial_weights, refine_sequence

__all__ = ("cycle_loss", "find_next_domain", "initial_weights", "refine_sequence")
