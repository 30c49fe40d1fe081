"""Residual network as a forward-Euler discretization of a control system.

A network of ``layers`` residual blocks propagates a batch of hidden states
through ``y <- y + dt * relu(W y + b)``.  Inputs enter through a learned
linear map into the hidden width and leave through a softmax classifier.
All arithmetic is 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericOverflowError, ShapeError

_PARAM_FIELDS = (
    "input_map",
    "layer_weights",
    "layer_biases",
    "classifier_weights",
    "classifier_bias",
)


@dataclass(frozen=True)
class LevelSpec:
    """Shape and time-discretization of one network in a level hierarchy.

    ``reg_weight`` applies to the residual-block parameters; the input map
    and classifier are penalized with ``reg_weight_out`` (the finest level's
    weight, identical on every level) because they are not discretized in
    time.
    """

    level: int            # 1-based, 1 = coarsest level of the owning hierarchy
    layers: int           # residual blocks
    time_step: float
    reg_weight: float
    width: int
    input_dim: int
    classes: int
    reg_weight_out: float | None = None

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"level must be >= 1, got {self.level}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        for name in ("width", "input_dim", "classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.time_step > 0.0:
            raise ValueError(f"time_step must be positive, got {self.time_step}")
        if self.reg_weight < 0.0:
            raise ValueError("reg_weight must be nonnegative")
        if self.reg_weight_out is None:
            object.__setattr__(self, "reg_weight_out", self.reg_weight)

    @property
    def horizon(self) -> float:
        """Final time of the underlying integration, ``layers * time_step``."""
        return self.layers * self.time_step

    @property
    def n_params(self) -> int:
        v, q, m, k = self.width, self.input_dim, self.classes, self.layers
        return v * q + k * (v * v + v) + m * v + m


@dataclass
class ParamVector:
    """All trainable parameters of one network.

    Behaves as a vector: supports ``+``, ``-``, scalar ``*``, ``dot`` and
    the infinity norm, always returning block shapes identical to the
    operands.  Blocks are float64 arrays:

    - ``input_map``           (width, input_dim)
    - ``layer_weights``       (layers, width, width)
    - ``layer_biases``        (layers, width)
    - ``classifier_weights``  (classes, width)
    - ``classifier_bias``     (classes,)
    """

    input_map: np.ndarray
    layer_weights: np.ndarray
    layer_biases: np.ndarray
    classifier_weights: np.ndarray
    classifier_bias: np.ndarray

    def __post_init__(self):
        for name in _PARAM_FIELDS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        v, q = self.input_map.shape
        k = len(self.layer_weights)
        if self.layer_weights.shape != (k, v, v):
            raise ShapeError(
                f"layer_weights must be ({k}, {v}, {v}), got {self.layer_weights.shape}"
            )
        if self.layer_biases.shape != (k, v):
            raise ShapeError(
                f"layer_biases must be ({k}, {v}), got {self.layer_biases.shape}"
            )
        m = len(self.classifier_weights)
        if self.classifier_weights.shape != (m, v):
            raise ShapeError(
                f"classifier_weights must be ({m}, {v}), got {self.classifier_weights.shape}"
            )
        if self.classifier_bias.shape != (m,):
            raise ShapeError(
                f"classifier_bias must be ({m},), got {self.classifier_bias.shape}"
            )

    # -- vector-space operations -------------------------------------------

    def _blocks(self):
        return tuple(getattr(self, name) for name in _PARAM_FIELDS)

    def _binary(self, other, op):
        if not isinstance(other, ParamVector):
            return NotImplemented
        for a, b in zip(self._blocks(), other._blocks()):
            if a.shape != b.shape:
                raise ShapeError(f"operand block shapes differ: {a.shape} vs {b.shape}")
        return ParamVector(*(op(a, b) for a, b in zip(self._blocks(), other._blocks())))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        s = float(scalar)
        return ParamVector(*(s * a for a in self._blocks()))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def dot(self, other) -> float:
        """Inner product over the full flattened parameter vector."""
        total = 0.0
        for a, b in zip(self._blocks(), other._blocks()):
            if a.shape != b.shape:
                raise ShapeError(f"operand block shapes differ: {a.shape} vs {b.shape}")
            total += float(np.vdot(a, b))
        return total

    def norm_inf(self) -> float:
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self._blocks())

    def copy(self) -> "ParamVector":
        return ParamVector(*(a.copy() for a in self._blocks()))

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self._blocks())

    def allclose(self, other, rtol=1e-12, atol=1e-12) -> bool:
        return all(
            np.allclose(a, b, rtol=rtol, atol=atol)
            for a, b in zip(self._blocks(), other._blocks())
        )

    def equals(self, other) -> bool:
        """Bitwise equality of every block."""
        return all(
            np.array_equal(a, b) for a, b in zip(self._blocks(), other._blocks())
        )

    # -- conversion ----------------------------------------------------------

    def ravel(self) -> np.ndarray:
        """Flatten to one vector (input map, layer weights, layer biases,
        classifier weights, classifier bias)."""
        return np.concatenate([a.ravel() for a in self._blocks()])

    @classmethod
    def from_ravel(cls, flat, spec) -> "ParamVector":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (spec.n_params,):
            raise ShapeError(f"expected {spec.n_params} entries, got {flat.shape}")
        v, q, m, k = spec.width, spec.input_dim, spec.classes, spec.layers
        sizes = [v * q, k * v * v, k * v, m * v, m]
        shapes = [(v, q), (k, v, v), (k, v), (m, v), (m,)]
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        return cls(*(p.reshape(s).copy() for p, s in zip(parts, shapes)))

    @classmethod
    def zeros(cls, spec) -> "ParamVector":
        v, q, m, k = spec.width, spec.input_dim, spec.classes, spec.layers
        return cls(
            np.zeros((v, q)),
            np.zeros((k, v, v)),
            np.zeros((k, v)),
            np.zeros((m, v)),
            np.zeros(m),
        )

    def conforms(self, spec) -> bool:
        v, q, m, k = spec.width, spec.input_dim, spec.classes, spec.layers
        return (
            self.input_map.shape == (v, q)
            and self.layer_weights.shape == (k, v, v)
            and self.classifier_weights.shape == (m, v)
        )

    def check_conforms(self, spec):
        if not self.conforms(spec):
            raise ShapeError(
                f"parameters with input map {self.input_map.shape}, "
                f"{len(self.layer_weights)} layers and classifier "
                f"{self.classifier_weights.shape} do not conform to level spec "
                f"(width={spec.width}, input_dim={spec.input_dim}, "
                f"classes={spec.classes}, layers={spec.layers})"
            )


@dataclass
class StateTrajectory:
    """Hidden states ``y_0 .. y_K`` of one forward pass.

    ``states`` has shape (layers + 1, batch, width); ``states[0]`` is the
    embedded input.
    """

    states: np.ndarray

    def __len__(self):
        return len(self.states)

    def state(self, k) -> np.ndarray:
        return self.states[k]

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def residual_module(y, weights, bias) -> np.ndarray:
    """One residual block's vector field: ``relu(W y + b)`` applied row-wise.

    ``y`` is (batch, width), ``weights`` (width, width), ``bias`` (width,).
    """
    y = np.asarray(y, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if y.ndim != 2 or weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ShapeError(f"expected (batch, v) states and (v, v) weights, got {y.shape} and {weights.shape}")
    v = weights.shape[0]
    if y.shape[1] != v or bias.shape != (v,):
        raise ShapeError(f"state width {y.shape[1]} and bias {bias.shape} do not match weights {weights.shape}")
    return np.maximum(y @ weights.T + bias, 0.0)


def _check_inputs(params, spec, x):
    params.check_conforms(spec)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ShapeError(f"inputs must be (batch, {spec.input_dim}), got {x.shape}")
    return x

def _locate_overflow(params, spec, x):
    """Re-propagate in constant memory to find the first non-finite state."""
    y = x @ params.input_map.T
    dt = spec.time_step
    weights, biases = params.layer_weights, params.layer_biases
    for k in range(spec.layers + 1):
        if not np.isfinite(y).all():
            return k
        if k < spec.layers:
            y = y + dt * np.maximum(y @ weights[k].T + biases[k], 0.0)
    return spec.layers


def _raise_overflow(params, spec, x):
    k = _locate_overflow(params, spec, x)
    raise NumericOverflowError(
        f"non-finite state at layer {k} of {spec.layers} (level {spec.level})",
        layer=k,
        level=spec.level,
    )


def _forward_states(params, spec, x, keep_masks=False):
    """Full trajectory plus, optionally, the relu activity masks per layer."""
    x = _check_inputs(params, spec, x)
    k_layers, v, dt = spec.layers, spec.width, spec.time_step
    states = np.empty((k_layers + 1, x.shape[0], v))
    masks = np.empty((k_layers, x.shape[0], v), dtype=bool) if keep_masks else None
    states[0] = x @ params.input_map.T
    weights_t = np.ascontiguousarray(params.layer_weights.transpose(0, 2, 1))
    scratch = np.empty_like(states[0])
    for k in range(k_layers):
        np.dot(states[k], weights_t[k], out=scratch)
        scratch += params.layer_biases[k]
        if keep_masks:
            np.greater(scratch, 0.0, out=masks[k])
        np.maximum(scratch, 0.0, out=scratch)
        scratch *= dt
        np.add(states[k], scratch, out=states[k + 1])
    # relu(.) >= 0, so states grow monotonically per component and a non-finite
    # value anywhere persists to the final state: one check suffices.
    if not np.isfinite(states[-1]).all():
        _raise_overflow(params, spec, x)
    return states, masks


def forward(params, spec, x) -> StateTrajectory:
    """Propagate a batch through all residual blocks, keeping every state."""
    states, _ = _forward_states(params, spec, x)
    return StateTrajectory(states)


def final_state(params, spec, x) -> np.ndarray:
    """Final hidden state only; constant memory in the number of layers."""
    x = _check_inputs(params, spec, x)
    dt = spec.time_step
    y = x @ params.input_map.T
    weights_t = np.ascontiguousarray(params.layer_weights.transpose(0, 2, 1))
    biases = params.layer_biases
    scratch = np.empty_like(y)
    for k in range(spec.layers):
        np.dot(y, weights_t[k], out=scratch)
        scratch += biases[k]
        np.maximum(scratch, 0.0, out=scratch)
        scratch *= dt
        y += scratch
    if not np.isfinite(y).all():
        _raise_overflow(params, spec, x)
    return y


def softmax(logits) -> np.ndarray:
    """Row-wise softmax in the shift-by-max form."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def predict(params, spec, x) -> np.ndarray:
    """Class probabilities, (batch, classes)."""
    y = final_state(params, spec, x)
    return softmax(y @ params.classifier_weights.T + params.classifier_bias)
