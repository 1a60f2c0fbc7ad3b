from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from experiments.models import IDOL_SCORERS, METHODS, ExperimentConfig
from experiments.services import run_cell

pytestmark = pytest.mark.slow

# =========================================================
# FIXTURES
# =========================================================

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"
SEEDS = [0, 1, 2, 3, 4]
BENCHMARKS = ["rotated_gaussians", "rotated_moons"]


def _benchmark_config(name: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig.load(CONFIG_DIR / f"{name}.yaml").with_overrides(seeds=SEEDS, **overrides)


def _perturbed(config: ExperimentConfig, mode: str, magnitude: float) -> ExperimentConfig:
    dataset = config.dataset.model_dump() | {"perturb": {"mode": mode, "magnitude": magnitude}}
    return config.with_overrides(dataset=dataset)


def _metrics(config: ExperimentConfig) -> pd.DataFrame:
    """One row of final metrics per (method, seed) cell."""
    rows = []
    for seed in config.seeds:
        for method in config.methods:
            cell = run_cell(config, method, seed)
            rows.append({"method": method, "seed": seed, **cell["metrics"]})
    return pd.DataFrame(rows)


@pytest.fixture(scope="module")
def grid_metrics():
    cache = {}

    def metrics_for(name):
        if name not in cache:
            cache[name] = _metrics(_benchmark_config(name, methods=list(METHODS)))
        return cache[name]

    return metrics_for


def _per_seed(frame: pd.DataFrame, column: str) -> pd.DataFrame:
    return frame.pivot(index="seed", columns="method", values=column)


# =========================================================
# METHOD ORDERING ON THE SYNTHETIC STREAMS
# =========================================================

class TestMethodOrdering:

    @pytest.mark.parametrize("name", BENCHMARKS)
    def test_target_accuracy_ordering(self, grid_metrics, name):
        acc = grid_metrics(name).groupby("method")["final_accuracy"].mean()

        assert abs(acc["gda_predefined"] - acc["idol_progressive_refined"]) <= 0.02
        assert min(acc["gda_predefined"], acc["idol_progressive_refined"]) - acc["gda_random"] >= 0.03
        assert acc["gda_random"] - acc["uda_target_pool"] >= 0.03
        assert acc["uda_target_pool"] >= acc["uda_target"]
        assert acc["uda_target"] - acc["source_only"] >= 0.03

    def test_scorer_ranking_by_sequence_correlation(self, grid_metrics):
        rho = _per_seed(grid_metrics("rotated_gaussians"), "spearman")
        holds = (
            (rho["idol_progressive"] >= rho["idol_discriminator"])
            & (rho["idol_discriminator"] >= rho["idol_manifold"])
            & (rho["idol_manifold"] >= rho["idol_confidence"])
        )
        assert holds.sum() >= 4

    @pytest.mark.parametrize("name", BENCHMARKS)
    @pytest.mark.parametrize("scorer", [s.value for s in IDOL_SCORERS])
    def test_refinement_does_not_hurt(self, grid_metrics, name, scorer):
        acc = _per_seed(grid_metrics(name), "final_accuracy")
        kept_up = acc[f"idol_{scorer}_refined"] >= acc[f"idol_{scorer}"] - 0.01
        assert kept_up.sum() >= 4

    @pytest.mark.parametrize("name", BENCHMARKS)
    def test_refinement_repairs_random_order(self, grid_metrics, name):
        acc = grid_metrics(name).groupby("method")["final_accuracy"].mean()
        assert acc["gda_random_refined"] > acc["gda_random"]


# =========================================================
# ROBUSTNESS TO A SMALL OR MIS-INDEXED POOL
# =========================================================

class TestRobustness:

    def test_subsampled_idol_degrades_less_than_noisy_truth_order(self, grid_metrics):
        clean = _per_seed(grid_metrics("rotated_gaussians"), "final_accuracy")
        base = _benchmark_config("rotated_gaussians")

        subsampled = _metrics(
            _perturbed(base, "subsample_frac", 0.3).with_overrides(methods=["idol_progressive_refined"])
        )
        noisy = _metrics(_perturbed(base, "noisy_index_frac", 0.7).with_overrides(methods=["gda_predefined"]))

        idol_drop = np.median(clean["idol_progressive_refined"]) - np.median(subsampled["final_accuracy"])
        truth_drop = np.median(clean["gda_predefined"]) - np.median(noisy["final_accuracy"])
        assert idol_drop < truth_drop
