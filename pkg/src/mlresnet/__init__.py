"""Multilevel V-cycle training for deep residual networks.

The network is the forward-Euler integration of a residual vector field;
coarser auxiliary networks on halved time grids accelerate training of the
finest one through coupled coarse-grid corrections.
"""

from .data import BatchRef, Dataset, batches, gen_circles, load_mnist
from .errors import (
    ConfigError,
    IdxFormatError,
    NumericOverflowError,
    ScheduleError,
    ShapeError,
)
from .harness import ExperimentConfig, TrainingRecord, accuracy, run, write_csv
from .hierarchy import Hierarchy, build_hierarchy, init_params
from .mgopt import (
    CoherenceMonitor,
    OptimizerConfig,
    VCycleSchedule,
    WorkLedger,
    default_schedule,
    level_optimizer,
    make_coupling,
    parse_schedule,
    sgd_epoch,
    vcycle,
    vcycle_cost,
)
from .net import (
    LevelSpec,
    ParamVector,
    StateTrajectory,
    final_state,
    forward,
    predict,
    residual_module,
    softmax,
)
from .objective import CoupledObjective, coupled_eval, coupled_gradient, gradient, loss
from .transfer import TransferPair

__version__ = "0.1.0"

__all__ = [
    "BatchRef",
    "CoherenceMonitor",
    "ConfigError",
    "CoupledObjective",
    "Dataset",
    "ExperimentConfig",
    "Hierarchy",
    "IdxFormatError",
    "LevelSpec",
    "NumericOverflowError",
    "OptimizerConfig",
    "ParamVector",
    "ScheduleError",
    "ShapeError",
    "StateTrajectory",
    "TrainingRecord",
    "TransferPair",
    "VCycleSchedule",
    "WorkLedger",
    "accuracy",
    "batches",
    "build_hierarchy",
    "coupled_eval",
    "coupled_gradient",
    "default_schedule",
    "final_state",
    "forward",
    "gen_circles",
    "gradient",
    "init_params",
    "level_optimizer",
    "load_mnist",
    "loss",
    "make_coupling",
    "parse_schedule",
    "predict",
    "residual_module",
    "run",
    "sgd_epoch",
    "softmax",
    "vcycle",
    "vcycle_cost",
    "write_csv",
]
