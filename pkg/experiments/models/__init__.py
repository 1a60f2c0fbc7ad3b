from .config import BASELINE_METHODS, IDOL_SCORERS, METHODS, DatasetConfig, ExperimentConfig, PerturbConfig

__all__ = ("BASELINE_METHODS", "IDOL_SCORERS", "METHODS", "DatasetConfig", "ExperimentConfig", "PerturbConfig")
