"""Adam with decoupled weight decay for MlpModel parameters."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config.schemas import AdamConfig
from nn.mlp import MlpGradients, MlpModel
from utils.errors import DimensionMismatch


@dataclass
class AdamState:
    """Moment estimates and hyperparameters, one moment array per parameter."""

    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 1e-5


def _params(model: MlpModel) -> List[np.ndarray]:
    return model.weights + model.biases


def adam_init(model: MlpModel, cfg: Optional[AdamConfig] = None) -> AdamState:
    """Zero moments matching the model's parameter shapes."""
    cfg = cfg or AdamConfig()
    params = _params(model)
    return AdamState(
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        epsilon=cfg.epsilon,
        weight_decay=cfg.weight_decay,
    )


def adam_step(model: MlpModel, state: AdamState, gradients: MlpGradients) -> Tuple[MlpModel, AdamState]:
    """One bias-corrected Adam update, in place on the owned model and state.

    Weight decay is applied multiplicatively before the Adam update
    (w <- w * (1 - lr * wd)).

    Returns:
        The updated (model, state) pair
    """
    params = _params(model)
    grads = gradients.arrays()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise DimensionMismatch("gradient shapes do not match model parameters")

    state.step_count += 1
    t = state.step_count
    lr = state.learning_rate
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    decay = 1.0 - lr * state.weight_decay

    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        if decay != 1.0:
            p *= decay
        p -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)

    return model, state
