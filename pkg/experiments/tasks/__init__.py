from .experiment_tasks import run_cell_task, run_experiment

__all__ = ("run_cell_task", "run_experiment")
