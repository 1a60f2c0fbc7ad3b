import numpy as np


def child_seed(seed: int, *keys: int) -> int:
    """
    Derive an independent, reproducible seed for a sub-computation.
    child_seed(seed) with no keys returns seed unchanged.
    """
    if not keys:
        return int(seed)
    state = np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)
    return int(state[0])


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(child_seed(seed, *keys))
