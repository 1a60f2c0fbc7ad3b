import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from learners.models import OptimizerConfig
from refinement.models import RefinementConfig
from scoring.models import ScorerChoice
from streams.models import UnlabeledSet
from utils.exceptions import AssumptionViolatedException, ContractException, FormatException
from utils.files import atomic_write_text


@dataclass(frozen=True, eq=False)
class DomainSequence:
    """
    Ordered partition of the pool positions 0..pool_size-1 into intermediate
    domains, source side first.
    """
    chunks: tuple
    pool_size: int
    method_tag: str = ""
    cycle_losses: tuple = ()

    def __post_init__(self):
        chunks = tuple(np.asarray(c, dtype=np.int64).reshape(-1) for c in self.chunks)
        if not chunks:
            raise ContractException("a domain sequence needs at least one chunk")
        if any(len(c) == 0 for c in chunks):
            raise ContractException("domain sequence chunks must be non-empty")
        flat = np.concatenate(chunks)
        if len(flat) != self.pool_size or not np.array_equal(np.sort(flat), np.arange(self.pool_size)):
            raise ContractException(f"chunks do not partition a pool of {self.pool_size}")
        object.__setattr__(self, "chunks", chunks)
        object.__setattr__(self, "cycle_losses", tuple(tuple(float(v) for v in losses) for losses in self.cycle_losses))

    def __len__(self):
        return len(self.chunks)

    @property
    def sizes(self) -> list:
        return [len(c) for c in self.chunks]

    def flattened(self) -> np.ndarray:
        return np.concatenate(self.chunks)

    def positions(self) -> np.ndarray:
        """positions()[i] is where pool example i sits in the flattened order."""
        positions = np.empty(self.pool_size, dtype=np.int64)
        positions[self.flattened()] = np.arange(self.pool_size)
        return positions

    def chunk_index(self) -> np.ndarray:
        """Domain number (0-based) of every pool example."""
        index = np.empty(self.pool_size, dtype=np.int64)
        for m, chunk in enumerate(self.chunks):
            index[chunk] = m
        return index

    def materialize(self, pool: UnlabeledSet) -> list:
        if len(pool) != self.pool_size:
            raise ContractException(f"sequence covers {self.pool_size} examples, pool has {len(pool)}")
        return [pool.subset(chunk) for chunk in self.chunks]

    # ------------------------------------------------------------------
    # TEXT FILE: one line per chunk, comma-separated example ids
    # ------------------------------------------------------------------

    def to_text(self, pool_ids) -> str:
        pool_ids = np.asarray(pool_ids, dtype=np.int64)
        if len(pool_ids) != self.pool_size:
            raise ContractException(f"{len(pool_ids)} ids for a sequence over {self.pool_size} examples")
        return "".join(",".join(str(i) for i in pool_ids[chunk]) + "\n" for chunk in self.chunks)

    def write(self, path, pool_ids) -> Path:
        return atomic_write_text(path, self.to_text(pool_ids))

    @classmethod
    def from_text(cls, text: str, pool: UnlabeledSet, method_tag: str = "") -> "DomainSequence":
        position_of = {int(i): p for p, i in enumerate(pool.ids)}
        chunks = []
        offset = 0
        for line in text.splitlines():
            if line.strip():
                try:
                    chunks.append([position_of[int(token)] for token in line.split(",")])
                except (KeyError, ValueError) as exc:
                    raise FormatException(f"bad example id in sequence line {line!r}", offset) from exc
            offset += len(line.encode("utf-8")) + 1
        return cls(chunks=tuple(chunks), pool_size=len(pool), method_tag=method_tag)

    @classmethod
    def read(cls, path, pool: UnlabeledSet, method_tag: str = "") -> "DomainSequence":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), pool, method_tag)


@dataclass(frozen=True)
class TheoryInputs:
    """Inputs of the gradual self-training error bound."""
    L0: float
    B: float
    R: float
    rho: float
    M: int
    n: int
    delta: float

    def __post_init__(self):
        if min(self.L0, self.B, self.R, self.rho) < 0:
            raise ContractException("L0, B, R and rho must be non-negative")
        if self.M < 1:
            raise ContractException(f"M must be >= 1, got {self.M}")
        if self.n < 1:
            raise ContractException(f"n must be >= 1, got {self.n}")
        if not 0 < self.delta < 1:
            raise ContractException(f"delta must be in (0, 1), got {self.delta}")
        if self.rho * self.R >= 1:
            raise AssumptionViolatedException(
                f"gradual shift assumption violated: rho * R = {self.rho * self.R:g} must be < 1"
            )

    @property
    def beta(self) -> float:
        return 2 / (1 - self.rho * self.R)

    @property
    def sampling_term(self) -> float:
        return (4 * self.B * self.R + math.sqrt(2 * math.log(2 * self.M / self.delta))) / math.sqrt(self.n)


@dataclass(frozen=True)
class IdolConfig:
    """
    Everything idol() needs besides the data. rounds=None means K = 2M with
    M = num_domains + 1.
    """
    num_domains: int
    scorer: ScorerChoice = ScorerChoice.PROGRESSIVE
    refine: bool = False
    rounds: int | None = None
    embed_dim: int = 2
    discriminator_hidden: tuple = (32,)
    discriminator_opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    self_train_opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    refinement: RefinementConfig = field(default_factory=RefinementConfig)

    def __post_init__(self):
        object.__setattr__(self, "scorer", ScorerChoice(self.scorer))
        object.__setattr__(self, "discriminator_hidden", tuple(self.discriminator_hidden))
        if self.num_domains < 1:
            raise ContractException(f"num_domains must be >= 1, got {self.num_domains}")
        if self.rounds is not None and self.rounds < 1:
            raise ContractException(f"rounds must be >= 1, got {self.rounds}")

    @property
    def M(self) -> int:
        return self.num_domains + 1

    @property
    def method_tag(self) -> str:
        return f"{self.scorer.value}_refined" if self.refine else self.scorer.value
