"""Parameter containers for the fully-connected tanh network."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = {"tanh": 0}


@dataclass
class MlpParams:
    """Weights and biases of a fully-connected network with one scalar output.

    ``weights[l]`` has shape (out_width, in_width) in row-major order and
    ``biases[l]`` shape (out_width,).  The hidden layers use the activation
    named in ``activation`` (only "tanh" is supported; the loss needs two
    smooth input derivatives); the final layer is affine.
    """

    input_dim: int
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}; smooth "
                             f"activations only (choices: {sorted(ACTIVATIONS)})")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in self.biases]
        self.validate()

    @property
    def hidden_widths(self) -> list[int]:
        return [w.shape[0] for w in self.weights[:-1]]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def validate(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights/biases layer counts differ")
        if not self.weights:
            raise ValueError("network needs at least one layer")
        fan_in = self.input_dim
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1:
                raise ValueError(f"layer {l}: weights must be 2-d, biases 1-d")
            if w.shape[1] != fan_in:
                raise ValueError(f"layer {l}: expected {fan_in} input columns, got {w.shape[1]}")
            if b.shape[0] != w.shape[0]:
                raise ValueError(f"layer {l}: bias length {b.shape[0]} != rows {w.shape[0]}")
            fan_in = w.shape[0]
        if fan_in != 1:
            raise ValueError("final layer must have a single output row")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {l}: non-finite parameter entries")

    def copy(self) -> "MlpParams":
        return MlpParams(
            input_dim=self.input_dim,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )

    def zeros_like(self) -> "ParamGrad":
        return ParamGrad(
            weights=[np.zeros_like(w) for w in self.weights],
            biases=[np.zeros_like(b) for b in self.biases],
        )


@dataclass
class ParamGrad:
    """Gradient holder, shape-congruent with the network it was computed for."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def check_congruent(self, params: MlpParams):
        ok = len(self.weights) == len(params.weights) and all(
            gw.shape == w.shape and gb.shape == b.shape
            for gw, w, gb, b in zip(self.weights, params.weights, self.biases, params.biases)
        )
        if not ok:
            raise ValueError("gradient not shape-congruent with parameters")

    def ravel(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.weights + self.biases])


def init_params(input_dim: int, hidden_widths: list[int], rng: np.random.Generator,
                activation: str = "tanh") -> MlpParams:
    """Xavier-uniform initialisation (biases zero); seeded via ``rng``."""
    widths = [input_dim, *hidden_widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(input_dim=input_dim, weights=weights, biases=biases,
                     activation=activation)


def flat_to_params(template: MlpParams, vec: np.ndarray) -> MlpParams:
    """Rebuild parameters from a flat vector (finite-difference helper)."""
    out = template.copy()
    pos = 0
    for arrs in (out.weights, out.biases):
        for a in arrs:
            a[...] = vec[pos:pos + a.size].reshape(a.shape)
            pos += a.size
    if pos != vec.size:
        raise ValueError("flat vector size mismatch")
    return out


def params_to_flat(params: MlpParams) -> np.ndarray:
    return np.concatenate([a.ravel() for a in params.weights + params.biases])
