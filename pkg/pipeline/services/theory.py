import logging

from pipeline.models import TheoryInputs

logger = logging.getLogger(__name__)


def theory_bound(inputs: TheoryInputs) -> float:
    """
    beta^(M+1) * (L0 + (4BR + sqrt(2 ln(2M / delta))) / sqrt(n)), beta = 2 / (1 - rho R).

    The gradual-shift assumption (rho R < 1) is checked when TheoryInputs is built.
    """
    bound = inputs.beta ** (inputs.M + 1) * (inputs.L0 + inputs.sampling_term)
    logger.debug(f"Bound beta={inputs.beta:.6g} M={inputs.M} n={inputs.n} -> {bound:.6g}")
    return bound
