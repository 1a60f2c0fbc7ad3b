from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from streams.models import UnlabeledSet
from utils.exceptions import ContractException, FormatException
from utils.files import atomic_write_text

CSV_COLUMNS = ["example_id", "score", "scorer_id", "round"]


class ScorerChoice(str, Enum):
    CONFIDENCE = "confidence"
    MANIFOLD = "manifold"
    DISCRIMINATOR = "discriminator"
    PROGRESSIVE = "progressive"
    RANDOM = "random"


def order_by_scores(scores) -> np.ndarray:
    """Pool positions by score descending; equal scores keep the lower position first."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(len(scores)), -scores))


@dataclass(frozen=True, eq=False)
class ScoredPool:
    """
    One score per pooled example; higher means closer to the source.

    rounds records the round that absorbed each example for the round-based
    scorers (0 when no round applies).
    """
    pool: UnlabeledSet
    scores: np.ndarray
    scorer_id: str
    rounds: np.ndarray = None

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (len(self.pool),):
            raise ContractException(f"{scores.size} scores for a pool of {len(self.pool)}")
        if not np.isfinite(scores).all():
            raise ContractException("scores must be finite")
        rounds = np.zeros(len(scores), dtype=np.int64) if self.rounds is None else np.asarray(self.rounds, np.int64)
        if rounds.shape != scores.shape:
            raise ContractException("rounds must align with scores")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "rounds", rounds)

    def __len__(self):
        return len(self.scores)

    def order(self) -> np.ndarray:
        return order_by_scores(self.scores)

    # ------------------------------------------------------------------
    # CSV
    # ------------------------------------------------------------------

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "example_id": self.pool.ids,
            "score": self.scores,
            "scorer_id": self.scorer_id,
            "round": self.rounds,
        })

    def write_csv(self, path) -> Path:
        return atomic_write_text(path, self.to_frame().to_csv(index=False, float_format="%.17g"))

    @classmethod
    def read_csv(cls, path, pool: UnlabeledSet) -> "ScoredPool":
        """Scores matched to `pool` by example id."""
        frame = pd.read_csv(path)
        if list(frame.columns) != CSV_COLUMNS:
            raise FormatException(f"score file {path} has columns {list(frame.columns)}, expected {CSV_COLUMNS}", 0)
        by_id = frame.set_index("example_id")
        missing = set(pool.ids.tolist()) - set(by_id.index.tolist())
        if missing or len(frame) != len(pool):
            raise ContractException(f"score file {path} does not cover the pool ({len(missing)} ids missing)")
        rows = by_id.loc[pool.ids]
        scorer_ids = frame["scorer_id"].unique()
        return cls(
            pool=pool,
            scores=rows["score"].to_numpy(dtype=np.float64),
            scorer_id=str(scorer_ids[0]) if len(scorer_ids) else "unknown",
            rounds=rows["round"].to_numpy(dtype=np.int64),
        )
