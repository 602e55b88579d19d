"""Deterministic feed-forward policy networks over flat parameter vectors.

The whole toolkit treats a policy as one flat float64 vector; this module
owns the layout (layer-major: weights row-major, then biases, per layer),
seeded initialization, forward evaluation, and exact forward-mode
directional derivatives of the outputs with respect to the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .rng import standard_normals


@dataclass(frozen=True)
class NetworkShape:
    """Architecture of a policy net: tanh hidden layers, bounded outputs.

    `action_bounds` scales the tanh-squashed output per dimension. With
    `squash_output=False` the final layer is linear (used where an exactly
    quadratic output-divergence is needed, e.g. calibration tests).
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    action_bounds: tuple[float, ...] = (1.0,)
    squash_output: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        bounds = self.action_bounds
        if np.isscalar(bounds):
            bounds = (float(bounds),)
        if len(bounds) == 1 and self.output_dim > 1:
            bounds = bounds * self.output_dim
        object.__setattr__(self, "action_bounds", tuple(float(b) for b in bounds))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if any(d < 1 for d in self.hidden_dims):
            raise ValueError("hidden dims must be positive")
        if len(self.action_bounds) != self.output_dim:
            raise ValueError("need one action bound per output dimension")
        if any(b <= 0 for b in self.action_bounds):
            raise ValueError("action bounds must be positive")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def parameter_count(self) -> int:
        dims = self.layer_dims
        return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))

    @cached_property
    def bounds_array(self) -> np.ndarray:
        b = np.asarray(self.action_bounds, dtype=np.float64)
        b.setflags(write=False)
        return b

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "output_dim": self.output_dim,
            "action_bounds": list(self.action_bounds),
            "squash_output": self.squash_output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkShape":
        return cls(
            input_dim=int(d["input_dim"]),
            hidden_dims=tuple(int(h) for h in d["hidden_dims"]),
            output_dim=int(d["output_dim"]),
            action_bounds=tuple(float(b) for b in d.get("action_bounds", [1.0])),
            squash_output=bool(d.get("squash_output", True)),
        )


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """Flat, immutable float64 view of all weights and biases."""

    values: np.ndarray
    shape: NetworkShape = field(repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != self.shape.parameter_count:
            raise ValueError(
                f"parameter vector has length {v.shape}, "
                f"shape requires {self.shape.parameter_count}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @cached_property
    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-layer (W, b) views into the flat vector; W is (fan_out, fan_in)."""
        return _unpack(self.values, self.shape)


def _unpack(flat: np.ndarray, shape: NetworkShape) -> list[tuple[np.ndarray, np.ndarray]]:
    dims = shape.layer_dims
    layers = []
    pos = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = flat[pos : pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        b = flat[pos : pos + fan_out]
        pos += fan_out
        layers.append((w, b))
    return layers


def init_from_seed(shape: NetworkShape, seed: int) -> ParameterVector:
    """Seed-reproducible initialization: weights ~ N(0, 1/fan_in), biases zero."""
    dims = shape.layer_dims
    n_weights = sum(dims[i] * dims[i + 1] for i in range(len(dims) - 1))
    draws = standard_normals(seed, n_weights)
    values = np.zeros(shape.parameter_count, dtype=np.float64)
    pos = 0
    wpos = 0
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        n = fan_in * fan_out
        values[pos : pos + n] = draws[wpos : wpos + n] * (1.0 / np.sqrt(fan_in))
        pos += n + fan_out  # biases stay zero
        wpos += n
    return ParameterVector(values, shape)


def forward(params: ParameterVector, observation: np.ndarray) -> np.ndarray:
    """Evaluate the policy on one observation; output is within action bounds."""
    shape = params.shape
    h = np.asarray(observation, dtype=np.float64)
    if h.shape != (shape.input_dim,):
        raise ValueError(f"observation has shape {h.shape}, expected ({shape.input_dim},)")
    layers = params.layers
    for w, b in layers[:-1]:
        h = np.tanh(w @ h + b)
    w, b = layers[-1]
    z = w @ h + b
    if shape.squash_output:
        return shape.bounds_array * np.tanh(z)
    return z


def forward_batch(params: ParameterVector, observations: np.ndarray) -> np.ndarray:
    """forward() over a (n, input_dim) batch of observations at once."""
    shape = params.shape
    h = np.asarray(observations, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != shape.input_dim:
        raise ValueError(f"observations have shape {h.shape}, expected (n, {shape.input_dim})")
    layers = params.layers
    for w, b in layers[:-1]:
        h = np.tanh(h @ w.T + b)
    w, b = layers[-1]
    z = h @ w.T + b
    if shape.squash_output:
        return shape.bounds_array * np.tanh(z)
    return z


def jvp_outputs(params: ParameterVector, observation: np.ndarray,
                direction: np.ndarray) -> np.ndarray:
    """Directional derivative of the outputs w.r.t. the parameters.

    Forward-mode and exact: returns (d output / d params) @ direction for one
    observation, by propagating the tangent alongside the activations.
    """
    out = jvp_batch(params, np.asarray(observation, dtype=np.float64)[None, :], direction)
    return out[0]


def jvp_batch(params: ParameterVector, observations: np.ndarray,
              direction: np.ndarray) -> np.ndarray:
    """jvp_outputs() over a (n, input_dim) batch, one shared direction."""
    shape = params.shape
    h = np.asarray(observations, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != shape.input_dim:
        raise ValueError(f"observations have shape {h.shape}, expected (n, {shape.input_dim})")
    d = np.asarray(direction, dtype=np.float64)
    if d.shape != (len(params),):
        raise ValueError(f"direction has shape {d.shape}, expected ({len(params)},)")
    d_layers = _unpack(d, shape)
    layers = params.layers

    dh = None
    for (w, b), (dw, db) in zip(layers[:-1], d_layers[:-1]):
        pre = h @ w.T + b
        dpre = h @ dw.T + db
        if dh is not None:
            dpre += dh @ w.T
        t = np.tanh(pre)
        dh = (1.0 - t * t) * dpre
        h = t
    (w, b), (dw, db) = layers[-1], d_layers[-1]
    dpre = h @ dw.T + db
    if dh is not None:
        dpre += dh @ w.T
    if shape.squash_output:
        t = np.tanh(h @ w.T + b)
        return shape.bounds_array * (1.0 - t * t) * dpre
    return dpre
