import hashlib
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from scoring.models import ScorerChoice

BASELINE_METHODS = (
    "source_only",
    "uda_target",
    "uda_target_pool",
    "gda_predefined",
    "gda_predefined_refined",
    "gda_random",
    "gda_random_refined",
)
IDOL_SCORERS = (
    ScorerChoice.CONFIDENCE,
    ScorerChoice.MANIFOLD,
    ScorerChoice.DISCRIMINATOR,
    ScorerChoice.PROGRESSIVE,
)
METHODS = BASELINE_METHODS + tuple(
    f"idol_{scorer.value}{suffix}" for scorer in IDOL_SCORERS for suffix in ("", "_refined")
)


class PerturbConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["subsample_frac", "noisy_index_frac", "outlier_extension"]
    magnitude: float | list[float]


class DatasetConfig(BaseModel):
    """Synthetic generator settings, or paths to a stream CSV / IDX digit files."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussians", "moons", "csv", "idx"] = "gaussians"
    num_classes: int = Field(3, ge=2)
    points_per_domain: int = Field(100, ge=1)
    generator_domains: int = Field(9, ge=2)
    total_angle: float = Field(120.0, gt=0, lt=180)
    noise_sd: float = Field(0.2, ge=0)
    path: str | None = None
    images_path: str | None = None
    labels_path: str | None = None
    width: int = 28
    height: int = 28
    perturb: PerturbConfig | None = None

    @model_validator(mode="after")
    def paths_for_file_kinds(self):
        if self.kind == "csv" and not self.path:
            raise ValueError("dataset kind 'csv' needs `path`")
        if self.kind == "idx" and not (self.images_path and self.labels_path):
            raise ValueError("dataset kind 'idx' needs `images_path` and `labels_path`")
        return self


class ExperimentConfig(BaseModel):
    """
    One experiment: a dataset, the method grid and every training knob.
    Defaults follow the desk-scale protocol (K = 2M, T = 10, 30 refinement
    epochs, batch 128). lr_theta = 0.1 on the batch-mean loss and an Adam
    step of lr_q = 0.01 on the example weights.
    """
    model_config = ConfigDict(extra="forbid")

    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    num_domains: int = Field(8, ge=1)
    methods: list[str] = Field(default_factory=lambda: list(METHODS))
    seeds: list[int] = Field(default_factory=lambda: [0])

    hidden_dims: list[int] = Field(default_factory=lambda: [32])
    lr: float = Field(0.1, ge=0)
    weight_decay: float = Field(0.0, ge=0)
    batch_size: int = Field(128, ge=1)
    source_epochs: int = Field(20, ge=0)
    domain_epochs: int = Field(20, ge=0)
    discriminator_epochs: int = Field(20, ge=0)
    keep_frac: float = Field(0.9, gt=0, le=1)

    rounds: int | None = Field(None, ge=1)
    embed_dim: int = Field(2, ge=1)

    t_steps: int = Field(10, ge=1)
    refine_epochs: int = Field(30, ge=0)
    lr_theta: float = Field(0.1, ge=0)
    lr_q: float = Field(0.01, ge=0)
    q_optimizer: Literal["adam", "sgd"] = "adam"
    refine_init: Literal["ramp", "scores"] = "ramp"

    output_dir: str | None = None

    @field_validator("methods")
    @classmethod
    def known_methods(cls, methods):
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if len(set(methods)) != len(methods):
            raise ValueError("methods must not repeat")
        return methods

    @field_validator("seeds")
    @classmethod
    def distinct_seeds(cls, seeds):
        if not seeds or len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be a non-empty list without repeats")
        return seeds

    # ------------------------------------------------------------------
    # YAML
    # ------------------------------------------------------------------

    def canonical_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=True, default_flow_style=False)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_yaml().encode("utf-8")).hexdigest()

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        return cls.model_validate(yaml.safe_load(text) or {})

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text(encoding="utf-8"))

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with the non-None overrides applied and validated."""
        data = self.model_dump()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return type(self).model_validate(data)
