"""Discrete training objective, its adjoint gradient, and coupled variants.

The objective is mean softmax cross-entropy over the batch plus Tikhonov
penalties: ``reg_weight`` times the squared norms of the residual-block
parameters and ``reg_weight_out`` times those of the input map and
classifier.  Gradients are exact gradients of this discrete functional,
obtained from the stored forward trajectory by the backward (adjoint)
recursion of the Euler step.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import BatchRef
from .errors import ShapeError
from .net import LevelSpec, ParamVector, _forward_states, final_state


def _check_batch(spec, batch):
    if batch.inputs.shape[1] != spec.input_dim:
        raise ShapeError(
            f"batch features {batch.inputs.shape[1]} != level input_dim {spec.input_dim}"
        )
    if batch.labels.shape[1] != spec.classes:
        raise ShapeError(
            f"batch classes {batch.labels.shape[1]} != level classes {spec.classes}"
        )


def _chunk_slices(n, threads):
    """Contiguous chunk bounds; chunk count and order are fixed by the
    configuration, so partial sums reduce deterministically."""
    n_chunks = max(1, min(threads, n))
    bounds = np.linspace(0, n, n_chunks + 1, dtype=int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _nll_terms(params, spec, x, labels):
    """Summed (not averaged) cross-entropy of one slice, in log-sum-exp form."""
    y = final_state(params, spec, x)
    z = y @ params.classifier_weights.T + params.classifier_bias
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    return float((lse - (z * labels).sum(axis=1)).sum())


def _adjoint_terms(params, spec, x, labels):
    """Summed cross-entropy and unscaled data-fit gradients of one slice."""
    states, masks = _forward_states(params, spec, x, keep_masks=True)
    y_final = states[-1]
    z = y_final @ params.classifier_weights.T + params.classifier_bias
    zmax = z.max(axis=1, keepdims=True)
    exp_z = np.exp(z - zmax)
    sum_exp = exp_z.sum(axis=1, keepdims=True)
    nll = float(
        ((zmax[:, 0] + np.log(sum_exp[:, 0])) - (z * labels).sum(axis=1)).sum()
    )
    resid = exp_z / sum_exp - labels          # d nll / d logits, per sample
    g_cls_w = resid.T @ y_final
    g_cls_b = resid.sum(axis=0)
    lam = resid @ params.classifier_weights   # adjoint state at the final layer
    g_w = np.empty_like(params.layer_weights)
    g_b = np.empty_like(params.layer_biases)
    dt = spec.time_step
    active = np.empty_like(lam)
    bump = np.empty_like(lam)
    for k in range(spec.layers - 1, -1, -1):
        np.multiply(lam, masks[k], out=active)
        np.dot(active.T, states[k], out=g_w[k])
        g_w[k] *= dt
        np.sum(active, axis=0, out=g_b[k])
        g_b[k] *= dt
        np.dot(active, params.layer_weights[k], out=bump)
        bump *= dt
        lam += bump
    g_in = lam.T @ x
    return nll, ParamVector(g_in, g_w, g_b, g_cls_w, g_cls_b)


def _map_chunks(fn, params, spec, batch, threads):
    slices = _chunk_slices(len(batch), threads)
    if len(slices) == 1:
        a, b = slices[0]
        return [fn(params, spec, batch.inputs[a:b], batch.labels[a:b])]
    with ThreadPoolExecutor(max_workers=len(slices)) as pool:
        futures = [
            pool.submit(fn, params, spec, batch.inputs[a:b], batch.labels[a:b])
            for a, b in slices
        ]
        return [f.result() for f in futures]


def _reg_value(params, spec) -> float:
    layer_sq = float(np.vdot(params.layer_weights, params.layer_weights))
    layer_sq += float(np.vdot(params.layer_biases, params.layer_biases))
    out_sq = float(np.vdot(params.classifier_weights, params.classifier_weights))
    out_sq += float(np.vdot(params.classifier_bias, params.classifier_bias))
    out_sq += float(np.vdot(params.input_map, params.input_map))
    return spec.reg_weight * layer_sq + spec.reg_weight_out * out_sq


def loss(params, spec, batch, threads=1) -> float:
    """Mean cross-entropy over the batch plus the Tikhonov penalties."""
    params.check_conforms(spec)
    _check_batch(spec, batch)
    nll = sum(_map_chunks(_nll_terms, params, spec, batch, threads))
    return nll / len(batch) + _reg_value(params, spec)


def gradient(params, spec, batch, threads=1):
    """Objective value and its exact gradient, as ``(value, ParamVector)``."""
    params.check_conforms(spec)
    _check_batch(spec, batch)
    parts = _map_chunks(_adjoint_terms, params, spec, batch, threads)
    nll = parts[0][0]
    raw = parts[0][1]
    for extra_nll, extra_grad in parts[1:]:
        nll += extra_nll
        raw = raw + extra_grad
    inv_p = 1.0 / len(batch)
    two_layer = 2.0 * spec.reg_weight
    two_out = 2.0 * spec.reg_weight_out
    grad = ParamVector(
        inv_p * raw.input_map + two_out * params.input_map,
        inv_p * raw.layer_weights + two_layer * params.layer_weights,
        inv_p * raw.layer_biases + two_layer * params.layer_biases,
        inv_p * raw.classifier_weights + two_out * params.classifier_weights,
        inv_p * raw.classifier_bias + two_out * params.classifier_bias,
    )
    return nll * inv_p + _reg_value(params, spec), grad


@dataclass
class CoupledObjective:
    """A level objective, optionally shifted by a linear coupling term.

    ``coupling`` holds the coefficients of the linear term added to the
    plain loss; it is built so that the coarse objective's gradient at the
    restriction point equals the restricted fine-level gradient.  ``None``
    means no coupling (the finest level), in which case value and gradient
    are exactly those of :func:`loss` / :func:`gradient` — bit for bit.
    """

    spec: LevelSpec
    batch: BatchRef
    coupling: ParamVector | None = None
    finest: bool | None = None
    threads: int = 1

    def __post_init__(self):
        _check_batch(self.spec, self.batch)
        if self.coupling is not None:
            self.coupling.check_conforms(self.spec)
        if self.finest is None:
            self.finest = self.coupling is None
        if self.finest and self.coupling is not None:
            if self.coupling.norm_inf() != 0.0:
                raise ValueError("a finest-level objective cannot carry a coupling term")
            self.coupling = None

    def value(self, params) -> float:
        v = loss(params, self.spec, self.batch, self.threads)
        if self.coupling is not None:
            v += self.coupling.dot(params)
        return v

    def gradient(self, params):
        v, g = gradient(params, self.spec, self.batch, self.threads)
        if self.coupling is not None:
            return v + self.coupling.dot(params), g + self.coupling
        return v, g


def coupled_eval(obj, params) -> float:
    return obj.value(params)


def coupled_gradient(obj, params):
    return obj.gradient(params)
