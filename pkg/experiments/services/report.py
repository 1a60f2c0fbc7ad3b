import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from experiments.models import ExperimentConfig
from experiments.services.grid import STEP_COLUMNS
from utils.files import atomic_write_text
from utils.locks import ResourceLock

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6g"
METRIC_COLUMNS = ["method", "seed", "final_accuracy", "spearman", "pearson", "class_balance", "error"]
SUMMARY_COLUMNS = ["method", "runs", "failed", "mean_accuracy", "sd_accuracy", "mean_spearman", "mean_class_balance"]
CYCLE_COLUMNS = ["method", "seed", "domain_index", "epoch", "cycle_loss"]


@dataclass
class RunReport:
    """Results of every (method, seed) cell, in grid order."""
    cells: list
    wall_times: dict = field(default_factory=dict)

    @property
    def failures(self) -> list:
        return [cell for cell in self.cells if cell["error"] is not None]

    # ------------------------------------------------------------------
    # TABLES
    # ------------------------------------------------------------------

    def steps_frame(self) -> pd.DataFrame:
        rows = [row for cell in self.cells for row in cell["steps"]]
        return pd.DataFrame(rows, columns=STEP_COLUMNS)

    def metrics_frame(self) -> pd.DataFrame:
        rows = [
            {"method": cell["method"], "seed": cell["seed"], **cell["metrics"], "error": cell["error"] or ""}
            for cell in self.cells
        ]
        return pd.DataFrame(rows, columns=METRIC_COLUMNS)

    def cycle_frame(self) -> pd.DataFrame:
        rows = [
            {"method": cell["method"], "seed": cell["seed"], "domain_index": m, "epoch": epoch, "cycle_loss": loss}
            for cell in self.cells
            for m, losses in enumerate(cell["cycle_losses"])
            for epoch, loss in enumerate(losses, start=1)
        ]
        return pd.DataFrame(rows, columns=CYCLE_COLUMNS)

    def summary_frame(self) -> pd.DataFrame:
        metrics = self.metrics_frame()
        rows = []
        # methods keep their grid order
        for method in dict.fromkeys(metrics["method"]):
            block = metrics[metrics["method"] == method]
            ok = block[block["error"] == ""]
            accuracy = ok["final_accuracy"].dropna()
            rows.append({
                "method": method,
                "runs": len(block),
                "failed": len(block) - len(ok),
                "mean_accuracy": accuracy.mean() if len(accuracy) else math.nan,
                "sd_accuracy": accuracy.std(ddof=1) if len(accuracy) > 1 else (0.0 if len(accuracy) else math.nan),
                "mean_spearman": ok["spearman"].mean(),
                "mean_class_balance": ok["class_balance"].mean(),
            })
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def timings_frame(self) -> pd.DataFrame:
        rows = [
            {"method": cell["method"], "seed": cell["seed"],
             "wall_time": self.wall_times.get((cell["method"], cell["seed"]), math.nan)}
            for cell in self.cells
        ]
        return pd.DataFrame(rows, columns=["method", "seed", "wall_time"])

    # ------------------------------------------------------------------
    # FILES
    # ------------------------------------------------------------------

    def write(self, out_dir, config: ExperimentConfig) -> Path:
        """
        Write every report file atomically. Everything except timings.csv is a
        pure function of the config and seeds.
        """
        out_dir = Path(out_dir)
        with ResourceLock("report", out_dir):
            tables = {
                "steps.csv": self.steps_frame(),
                "metrics.csv": self.metrics_frame(),
                "summary.csv": self.summary_frame(),
                "cycle_losses.csv": self.cycle_frame(),
                "timings.csv": self.timings_frame(),
            }
            for name, frame in tables.items():
                atomic_write_text(out_dir / name, frame.to_csv(index=False, float_format=FLOAT_FORMAT))

            for cell in self.cells:
                if cell["sequence"] is not None:
                    text = "".join(",".join(str(i) for i in chunk) + "\n" for chunk in cell["sequence"])
                    atomic_write_text(out_dir / "sequences" / f"{cell['method']}__seed{cell['seed']}.txt", text)

            atomic_write_text(out_dir / "config.yaml", config.canonical_yaml())
            atomic_write_text(out_dir / "config.sha256", config.config_hash() + "\n")

        logger.info(
            f"Wrote report for {len(self.cells)} cells to {out_dir} ({len(self.failures)} failed)",
            extra={"config_hash": config.config_hash()},
        )
        return out_dir
