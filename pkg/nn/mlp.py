"""Fully connected ELU network with exact input Jacobians and backprop.

Hidden layers use ELU (alpha = 1); the output layer is affine so the network
can reach all of R^l. Weights are stored as (fan_out, fan_in) matrices.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from utils.errors import DimensionMismatch


def elu(t: np.ndarray) -> np.ndarray:
    return np.where(t >= 0.0, t, np.expm1(np.minimum(t, 0.0)))


def elu_derivative(t: np.ndarray) -> np.ndarray:
    # right-continuous at 0: derivative 1
    return np.where(t >= 0.0, 1.0, np.exp(np.minimum(t, 0.0)))


@dataclass
class MlpModel:
    """Layer dimensions plus per-layer weights and biases."""

    layer_dims: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    seed: int = 0

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DimensionMismatch("need one weight matrix and bias per layer transition")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[i + 1], self.layer_dims[i])
            if w.shape != expected or b.shape != (expected[0],):
                raise DimensionMismatch(
                    f"layer {i}: weight {w.shape} / bias {b.shape} incompatible with dims {expected}"
                )

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.seed,
        )


@dataclass
class MlpGradients:
    """Parameter-shaped gradients."""

    weights: List[np.ndarray] = field(default_factory=list)
    biases: List[np.ndarray] = field(default_factory=list)

    def arrays(self) -> List[np.ndarray]:
        return self.weights + self.biases


def mlp_init(layer_dims: Sequence[int], seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases, deterministic in the seed."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"invalid layer dims {list(layer_dims)}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(dims, weights, biases, seed)


def _inputs(model: MlpModel, x) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != model.input_dim:
        raise DimensionMismatch(f"input dim {arr.shape[-1]} != model input dim {model.input_dim}")
    return arr, single


def _forward_cache(model: MlpModel, X: np.ndarray):
    """Forward pass keeping layer inputs and pre-activations."""
    inputs, pre = [], []
    h = X
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(h)
        a = h @ w.T + b
        pre.append(a)
        h = elu(a) if i < model.n_layers - 1 else a
    return h, inputs, pre


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Network output for a single input vector or an (n, d) batch."""
    X, single = _inputs(model, x)
    out, _, _ = _forward_cache(model, X)
    return out[0] if single else out


def mlp_input_jacobian(model: MlpModel, x) -> np.ndarray:
    """d(output)/d(input) via the chain rule; (out, in) or (n, out, in) for batches."""
    X, single = _inputs(model, x)
    _, _, pre = _forward_cache(model, X)
    jac = np.broadcast_to(model.weights[0], (X.shape[0],) + model.weights[0].shape)
    for i in range(1, model.n_layers):
        jac = elu_derivative(pre[i - 1])[:, :, None] * jac
        jac = np.einsum("oh,nhi->noi", model.weights[i], jac)
    jac = np.array(jac)
    return jac[0] if single else jac


def mlp_param_gradients(model: MlpModel, x, upstream) -> MlpGradients:
    """Gradient of <upstream, output> w.r.t. all weights and biases.

    For batches the per-sample contributions are summed in row order.
    """
    X, _ = _inputs(model, x)
    U = np.atleast_2d(np.asarray(upstream, dtype=float))
    if U.shape != (X.shape[0], model.output_dim):
        raise DimensionMismatch(f"upstream shape {U.shape} != ({X.shape[0]}, {model.output_dim})")
    _, inputs, pre = _forward_cache(model, X)
    grads_w = [None] * model.n_layers
    grads_b = [None] * model.n_layers
    delta = U
    for i in range(model.n_layers - 1, -1, -1):
        grads_w[i] = delta.T @ inputs[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i]) * elu_derivative(pre[i - 1])
    return MlpGradients(grads_w, grads_b)
