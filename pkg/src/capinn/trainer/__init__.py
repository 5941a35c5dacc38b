"""Training loop, schedules, time marching and diagnostics."""
from .diagnostics import SecantTracker, estimate_tau, ratio_reliable, secant_error_ratio
from .landscape import landscape_project, random_directions, read_grid, write_grid
from .loop import DIVERGENCE_LOSS, LoopResult, MarchResult, TrainConfig, make_evaluator, run_loop, time_march, train
from .metrics import MetricsRow, MetricsWriter, columns, read_metrics
from .schedule import LrSchedule

__all__ = [
    "DIVERGENCE_LOSS",
    "LoopResult",
    "LrSchedule",
    "MarchResult",
    "MetricsRow",
    "MetricsWriter",
    "SecantTracker",
    "TrainConfig",
    "columns",
    "estimate_tau",
    "landscape_project",
    "make_evaluator",
    "random_directions",
    "ratio_reliable",
    "read_grid",
    "read_metrics",
    "run_loop",
    "secant_error_ratio",
    "time_march",
    "train",
    "write_grid",
]
