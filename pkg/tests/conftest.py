import numpy as np
import pytest

from mlresnet.net import LevelSpec, ParamVector


def random_params(spec, rng, scale=0.5):
    return ParamVector(
        rng.normal(0.0, scale, (spec.width, spec.input_dim)),
        rng.normal(0.0, scale, (spec.layers, spec.width, spec.width)),
        rng.normal(0.0, scale, (spec.layers, spec.width)),
        rng.normal(0.0, scale, (spec.classes, spec.width)),
        rng.normal(0.0, scale, spec.classes),
    )


def small_spec(layers=4, width=3, input_dim=2, classes=2, reg=1e-3, level=1):
    return LevelSpec(
        level=level,
        layers=layers,
        time_step=1.0 / layers,
        reg_weight=reg,
        width=width,
        input_dim=input_dim,
        classes=classes,
    )


def one_hot(classes, count, rng):
    return np.eye(classes)[rng.integers(0, classes, count)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
