from .metrics import (
    assignment_variance,
    class_balance_ratio,
    correlation_report,
    evaluate_accuracy,
    sequence_correlation,
)
from .sequence import (
    coarse_scores,
    idol,
    order_domains_by_score,
    run_gradual,
    sequence_from_index,
    sort_and_chunk,
)
from .theory import theory_bound

__all__ = (
    "assignment_variance",
    "class_balance_ratio",
    "coarse_scores",
    "correlation_report",
    "evaluate_accuracy",
    "idol",
    "order_domains_by_score",
    "run_gradual",
    "sequence_correlation",
    "sequence_from_index",
    "sort_and_chunk",
    "theory_bound",
)
