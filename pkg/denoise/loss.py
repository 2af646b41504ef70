"""Monte-Carlo denoising objective for the approximate projection."""

from typing import Tuple

import numpy as np

from nn.mlp import MlpGradients, MlpModel, mlp_forward, mlp_param_gradients


def denoising_loss_batch(
    model: MlpModel,
    batch: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
) -> Tuple[float, MlpGradients]:
    """Mean of |z − Π(z + σg)|² over the batch and its parameter gradients.

    One Gaussian draw per sample; the target is the clean sample z.

    Args:
        model: Network parameterizing Π
        batch: (n, l) clean cloud points
        sigma: Noise scale of the Gaussian f_σ
        rng: Generator providing the noise draws

    Returns:
        Tuple of (mean loss, parameter gradients)
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if batch.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    noised = batch + sigma * rng.standard_normal(batch.shape)
    diff = mlp_forward(model, noised) - batch
    n = batch.shape[0]
    loss = float(np.sum(diff * diff) / n)
    grads = mlp_param_gradients(model, noised, 2.0 * diff / n)
    return loss, grads
