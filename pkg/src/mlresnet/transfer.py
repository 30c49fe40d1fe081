"""Parameter transfer between adjacent levels of the time-grid hierarchy.

Prolongation copies each coarse block onto the two fine layers covering its
time interval (piecewise constant in time).  Restriction is its transpose,
used as a plain sum for gradients and in a row-normalized (pair-average)
variant for parameters so that restriction undoes prolongation exactly.
The input map and classifier live on no time grid and transfer unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .net import LevelSpec, ParamVector

PARAM_RESTRICTION_MODES = ("average", "transpose")


@dataclass(frozen=True)
class TransferPair:
    """Transfer operators between one fine level and the next coarser one."""

    fine: LevelSpec
    coarse: LevelSpec

    def __post_init__(self):
        if self.fine.layers != 2 * self.coarse.layers:
            raise ShapeError(
                f"fine level must have twice the coarse layer count, got "
                f"{self.fine.layers} vs {self.coarse.layers}"
            )
        for name in ("width", "input_dim", "classes"):
            if getattr(self.fine, name) != getattr(self.coarse, name):
                raise ShapeError(f"levels disagree on {name}")

    def prolong(self, coarse: ParamVector) -> ParamVector:
        """Coarse-to-fine: copy each layer block onto its two fine layers."""
        coarse.check_conforms(self.coarse)
        return ParamVector(
            coarse.input_map.copy(),
            np.repeat(coarse.layer_weights, 2, axis=0),
            np.repeat(coarse.layer_biases, 2, axis=0),
            coarse.classifier_weights.copy(),
            coarse.classifier_bias.copy(),
        )

    def restrict_gradient(self, fine: ParamVector) -> ParamVector:
        """Fine-to-coarse transpose of ``prolong``: sum fine layer pairs."""
        fine.check_conforms(self.fine)
        kc = self.coarse.layers
        v = self.fine.width
        return ParamVector(
            fine.input_map.copy(),
            fine.layer_weights.reshape(kc, 2, v, v).sum(axis=1),
            fine.layer_biases.reshape(kc, 2, v).sum(axis=1),
            fine.classifier_weights.copy(),
            fine.classifier_bias.copy(),
        )

    def restrict_params(self, fine: ParamVector, mode="average") -> ParamVector:
        """Fine-to-coarse for iterates: average fine layer pairs.

        ``mode="transpose"`` uses the literal transpose (pair sums) instead,
        which doubles layer-parameter magnitude per coarsening and is kept
        only for comparison runs.
        """
        if mode not in PARAM_RESTRICTION_MODES:
            raise ValueError(f"unknown param restriction mode {mode!r}")
        summed = self.restrict_gradient(fine)
        if mode == "transpose":
            return summed
        return ParamVector(
            summed.input_map,
            0.5 * summed.layer_weights,
            0.5 * summed.layer_biases,
            summed.classifier_weights,
            summed.classifier_bias,
        )
