"""Construction of the level hierarchy and parameter initialization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net import LevelSpec, ParamVector
from .transfer import TransferPair


@dataclass(frozen=True)
class Hierarchy:
    """Ordered family of level specs, from coarsest (level 1) to finest."""

    levels: tuple[LevelSpec, ...]

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def finest(self) -> LevelSpec:
        return self.levels[-1]

    @property
    def coarsest(self) -> LevelSpec:
        return self.levels[0]

    def level(self, l) -> LevelSpec:
        """1-based access; level 1 is the coarsest."""
        if not 1 <= l <= self.n_levels:
            raise ValueError(f"level {l} outside 1..{self.n_levels}")
        return self.levels[l - 1]

    def pair(self, l) -> TransferPair:
        """Transfer operators between level ``l`` and level ``l - 1``."""
        return TransferPair(fine=self.level(l), coarse=self.level(l - 1))

    def cost_factor(self, l) -> float:
        """Cost of one gradient evaluation on level ``l`` in finest-level
        work units: 2**(l - L)."""
        if not 1 <= l <= self.n_levels:
            raise ValueError(f"level {l} outside 1..{self.n_levels}")
        return 2.0 ** (l - self.n_levels)


def build_hierarchy(
    blocks,
    n_levels,
    width,
    input_dim,
    classes,
    reg_weight,
    horizon=1.0,
) -> Hierarchy:
    """Build ``n_levels`` specs by repeatedly halving the finest layer count.

    ``blocks`` is the finest-level layer count and must be divisible by
    2**(n_levels - 1).  Halving the layer count doubles the time step and
    doubles the layer regularization weight, which keeps the discrete
    penalty consistent across resolutions; the input-map/classifier weight
    stays at the finest value on every level.
    """
    if n_levels < 1:
        raise ValueError(f"n_levels must be >= 1, got {n_levels}")
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    factor = 2 ** (n_levels - 1)
    if blocks % factor != 0:
        raise ValueError(
            f"finest layer count {blocks} is not divisible by 2**(L-1) = "
            f"{factor} required for L = {n_levels} levels"
        )
    levels = []
    for l in range(1, n_levels + 1):
        k = blocks >> (n_levels - l)
        levels.append(
            LevelSpec(
                level=l,
                layers=k,
                time_step=horizon / k,
                reg_weight=reg_weight * 2.0 ** (n_levels - l),
                width=width,
                input_dim=input_dim,
                classes=classes,
                reg_weight_out=reg_weight,
            )
        )
    return Hierarchy(tuple(levels))


def init_params(spec, rng_seed) -> ParamVector:
    """Seeded initial parameters: Gaussian weights (std 0.1), zero biases.

    Draw order is fixed (input map, layer weights, classifier weights) so a
    seed fully determines the result.
    """
    rng = np.random.default_rng(rng_seed)
    v, q, m, k = spec.width, spec.input_dim, spec.classes, spec.layers
    std = 0.1
    return ParamVector(
        std * rng.standard_normal((v, q)),
        std * rng.standard_normal((k, v, v)),
        np.zeros((k, v)),
        std * rng.standard_normal((m, v)),
        np.zeros(m),
    )
