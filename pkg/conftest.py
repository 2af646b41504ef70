"""Shared pytest fixtures."""

import numpy as np
import pytest

from config import config
from config.schemas import TrainConfig
from denoise.trainer import train_projection
from manifolds.analytic import AffineSubspace, Sphere, Torus, sample_cloud


def central_difference(f, x, h=1e-6):
    """Jacobian of f at x by central differences, shape f(x).shape + x.shape."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    jac = np.zeros(f0.shape + x.shape)
    for idx in np.ndindex(x.shape):
        step = np.zeros_like(x)
        step[idx] = h
        diff = (np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2.0 * h)
        jac[(Ellipsis,) + idx] = diff
    return jac


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fd():
    return central_difference


@pytest.fixture
def sphere():
    return Sphere(1.0)


@pytest.fixture
def torus():
    return Torus()


@pytest.fixture
def plane():
    """The xy-plane in R^3."""
    return AffineSubspace(np.zeros(3), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@pytest.fixture(scope="session")
def torus_cloud():
    """5·10^4 clean samples of the default torus."""
    return sample_cloud(Torus(), 50000, 0.0, seed=0)


@pytest.fixture(scope="session")
def trained_torus(torus_cloud):
    """Full-size torus projection (6 layers of width 128, 20k steps), trained once per σ."""
    cache = {}

    def train(sigma: float):
        if sigma not in cache:
            cfg = TrainConfig(
                sigma=sigma, steps=20000, layer_dims=list(config.DEFAULT_LAYER_DIMS),
                seed=0, trace_every=1000, show_progress=False,
            )
            cache[sigma] = train_projection(torus_cloud, cfg)
        return cache[sigma]

    return train
