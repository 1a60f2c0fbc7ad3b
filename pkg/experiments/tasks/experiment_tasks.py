import logging
import time
from pathlib import Path

from celery import group, shared_task

from experiments.models import ExperimentConfig
from experiments.services import RunReport, failed_cell, grid_cells, run_cell
from Idol import settings

logger = logging.getLogger(__name__)


@shared_task
def run_cell_task(config_data: dict, method: str, seed: int) -> dict:
    """One (method, seed) cell. Failures are recorded in the result, never raised."""
    config = ExperimentConfig.model_validate(config_data)
    started = time.perf_counter()
    try:
        cell = run_cell(config, method, seed)
    except Exception as exc:
        logger.exception(
            f"Cell {method} seed={seed} failed",
            extra={"method": method, "seed": seed},
        )
        cell = failed_cell(method, seed, f"{type(exc).__name__}: {exc}")
    cell["wall_time"] = time.perf_counter() - started
    return cell


def run_experiment(config: ExperimentConfig, out_dir=None) -> RunReport:
    """
    Dispatch the (method x seed) grid as a group of cell tasks, then assemble
    and write the report in grid order.
    """
    out_dir = Path(out_dir or config.output_dir or settings.OUTPUT_DIR)
    payload = config.model_dump(mode="json")
    cells = grid_cells(config)

    workflow = group(run_cell_task.s(payload, method, seed) for method, seed in cells)
    result = workflow.apply() if settings.CELERY_TASK_ALWAYS_EAGER else workflow.apply_async()
    results = result.get()

    wall_times = {(cell["method"], cell["seed"]): cell.pop("wall_time") for cell in results}
    report = RunReport(cells=results, wall_times=wall_times)
    report.write(out_dir, config)
    return report
