from .grid import (
    STEP_COLUMNS,
    build_stream,
    failed_cell,
    grid_cells,
    idol_config,
    optimizer,
    refinement_config,
    run_cell,
)
from .report import RunReport

__all__ = (
    "STEP_COLUMNS",
    "RunReport",
    "build_stream",
    "failed_cell",
    "grid_cells",
    "idol_config",
    "optimizer",
    "refinement_config",
    "run_cell",
)
