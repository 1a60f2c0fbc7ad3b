from .scored_pool import CSV_COLUMNS, ScoredPool, ScorerChoice, order_by_scores

__all__ = ("CSV_COLUMNS", "ScoredPool", "ScorerChoice", "order_by_scores")
