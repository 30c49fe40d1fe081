"""Experiment orchestration: configs, training loops, metrics output."""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, gen_circles, load_mnist
from .errors import ConfigError, NumericOverflowError
from .hierarchy import build_hierarchy, init_params
from .mgopt import (
    OptimizerConfig,
    WorkLedger,
    default_schedule,
    parse_schedule,
    sgd_epoch,
    vcycle,
    vcycle_cost,
)
from .net import predict
from .objective import loss

CSV_HEADER = ("v_cycle", "train_loss", "validation_accuracy", "work_units", "wall_time_s")

DATASET_DEFAULTS = {
    "circles": dict(width=3, reg_weight=1e-4, learning_rate=0.1, batch_size=0,
                    target_accuracy=1.0),
    "mnist": dict(width=10, reg_weight=1e-5, learning_rate=0.01, batch_size=1000,
                  target_accuracy=0.93),
}

ACCOUNTING_MODES = ("paper", "measured")


@dataclass
class ExperimentConfig:
    """One training run.  Fields left as None pick the dataset defaults.

    ``batch_size = 0`` selects full-batch training (one V-cycle per
    iteration); a positive value selects mini-batch epochs.  In
    ``deterministic`` mode the wall-time column is suppressed (written as
    0.0) so that reruns with the same seed reproduce the CSV bit for bit.
    """

    dataset: str = "circles"
    levels: int = 4
    blocks: int = 256
    width: int | None = None
    learning_rate: float | None = None
    reg_weight: float | None = None
    schedule: str | None = None
    batch_size: int | None = None
    seed: int = 1
    max_vcycles: int = 500
    target_accuracy: float | None = None
    out: str | None = None
    subset: int = 0
    threads: int = 1
    accounting: str = "paper"
    param_restriction: str = "average"
    deterministic: bool = True
    horizon: float = 1.0
    mnist_train_images: str | None = None
    mnist_train_labels: str | None = None
    mnist_test_images: str | None = None
    mnist_test_labels: str | None = None

    def __post_init__(self):
        if self.dataset not in DATASET_DEFAULTS:
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        for name, value in DATASET_DEFAULTS[self.dataset].items():
            if getattr(self, name) is None:
                setattr(self, name, value)
        if self.schedule is None:
            self.schedule = default_schedule(self.levels)
        if self.accounting not in ACCOUNTING_MODES:
            raise ConfigError(f"unknown accounting mode {self.accounting!r}")
        if not 0.0 < self.target_accuracy <= 1.0:
            raise ConfigError(f"target accuracy must be in (0, 1], got {self.target_accuracy}")
        if self.max_vcycles < 0:
            raise ConfigError("max_vcycles must be >= 0")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0 (0 = full batch)")


@dataclass(frozen=True)
class TrainingRecord:
    """Metrics after one V-cycle (index 0 is the initial evaluation)."""

    v_cycle: int
    train_loss: float
    validation_accuracy: float
    work_units: float
    wall_time_s: float


def accuracy(params, spec, dataset) -> float:
    """Fraction of samples whose most probable class matches the label.

    Ties in the predicted probabilities resolve to the lowest class index.
    """
    probs = predict(params, spec, dataset.inputs)
    return float(np.mean(np.argmax(probs, axis=1) == np.argmax(dataset.labels, axis=1)))


def _load_datasets(config):
    if config.dataset == "circles":
        train, test = gen_circles(seed=config.seed)
    else:
        paths = (config.mnist_train_images, config.mnist_train_labels,
                 config.mnist_test_images, config.mnist_test_labels)
        if any(p is None for p in paths):
            raise ConfigError("mnist requires all four --mnist-* file paths")
        for p in paths:
            if not os.path.exists(p):
                raise ConfigError(f"mnist file not found: {p}")
        train = load_mnist(paths[0], paths[1], split="train")
        test = load_mnist(paths[2], paths[3], pixel_mean=train.pixel_mean, split="test")
    if config.subset:
        train = train.subset(config.subset)
    return train, test


def write_csv(records, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.v_cycle,
                repr(r.train_loss),
                repr(r.validation_accuracy),
                repr(r.work_units),
                repr(r.wall_time_s),
            ])


def run(config, monitor=None):
    """Train per ``config`` until the validation target or the cycle cap.

    Returns ``(final_params, records)`` and, when ``config.out`` is set,
    writes one CSV row per record.  Metric evaluations (training loss and
    validation accuracy) are not charged to the work ledger.  Completed
    records are flushed even when training aborts on a numeric failure.
    """
    schedule = parse_schedule(config.schedule)
    if schedule.n_levels != config.levels:
        raise ConfigError(
            f"schedule {config.schedule!r} has {schedule.n_levels} levels, "
            f"config says {config.levels}"
        )
    train, test = _load_datasets(config)
    hier = build_hierarchy(
        config.blocks, config.levels, config.width,
        train.n_features, train.n_classes, config.reg_weight, config.horizon,
    )
    opt = OptimizerConfig(
        learning_rate=config.learning_rate,
        deterministic=config.deterministic,
        param_restriction=config.param_restriction,
        threads=config.threads,
    )
    theta = init_params(hier.finest, config.seed)
    ledger = WorkLedger()
    unit_cost = vcycle_cost(schedule, config.levels)
    train_batch = train.as_batch()
    records = []
    start = time.perf_counter()

    def snapshot(cycle, params):
        wall = 0.0 if config.deterministic else time.perf_counter() - start
        work = cycle * unit_cost if config.accounting == "paper" else ledger.total
        records.append(TrainingRecord(
            v_cycle=cycle,
            train_loss=loss(params, hier.finest, train_batch, config.threads),
            validation_accuracy=accuracy(params, hier.finest, test),
            work_units=work,
            wall_time_s=wall,
        ))

    snapshot(0, theta)
    cycles = 0
    try:
        if config.batch_size == 0:
            while (cycles < config.max_vcycles
                   and records[-1].validation_accuracy < config.target_accuracy):
                theta = vcycle(config.levels, theta, None, hier, schedule, opt,
                               train_batch, ledger=ledger, monitor=monitor)
                cycles += 1
                snapshot(cycles, theta)
        else:
            epoch = 0
            while (cycles < config.max_vcycles
                   and records[-1].validation_accuracy < config.target_accuracy):

                def on_cycle(params):
                    nonlocal cycles
                    cycles += 1
                    snapshot(cycles, params)
                    return cycles >= config.max_vcycles

                theta = sgd_epoch(theta, hier, schedule, opt, train,
                                  config.batch_size, seed=config.seed,
                                  epoch=epoch, ledger=ledger, monitor=monitor,
                                  on_cycle=on_cycle)
                epoch += 1
                # The accuracy target is only checked at epoch boundaries,
                # which the loop condition sees via the last record.
    finally:
        if config.out:
            write_csv(records, config.out)
    return theta, records
