"""Synthetic decoders ψ with analytic Jacobians.

They stand in for trained decoders when exercising the pullback energies.
All methods accept a single latent vector or an (n, l) batch.
"""

from abc import ABC, abstractmethod
from typing import Callable, Tuple

import numpy as np

from utils.errors import ConfigError, DimensionMismatch


def _batch(z) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=float)
    single = arr.ndim == 1
    return np.atleast_2d(arr), single


class Decoder(ABC):
    """Smooth map ψ: R^l → R^d."""

    name = "decoder"

    def decode(self, z) -> np.ndarray:
        Z, single = _batch(z)
        out = self._decode(Z)
        return out[0] if single else out

    def jacobian(self, z) -> np.ndarray:
        Z, single = _batch(z)
        out = self._jacobian(Z)
        return out[0] if single else out

    @abstractmethod
    def _decode(self, Z: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _jacobian(self, Z: np.ndarray) -> np.ndarray:
        ...


class IdentityDecoder(Decoder):
    name = "identity"

    def _decode(self, Z):
        return Z.copy()

    def _jacobian(self, Z):
        return np.broadcast_to(np.eye(Z.shape[1]), (Z.shape[0], Z.shape[1], Z.shape[1])).copy()


class LinearDecoder(Decoder):
    name = "linear"

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    def _decode(self, Z):
        if Z.shape[1] != self.matrix.shape[1]:
            raise DimensionMismatch(f"linear decoder expects dim {self.matrix.shape[1]}, got {Z.shape[1]}")
        return Z @ self.matrix.T

    def _jacobian(self, Z):
        if Z.shape[1] != self.matrix.shape[1]:
            raise DimensionMismatch(f"linear decoder expects dim {self.matrix.shape[1]}, got {Z.shape[1]}")
        return np.broadcast_to(self.matrix, (Z.shape[0],) + self.matrix.shape).copy()


class SphereLift(Decoder):
    """Split z into blocks of `block_dim` and normalise each block to a unit vector."""

    name = "sphere-lift"

    def __init__(self, block_dim: int = 3):
        self.block_dim = block_dim

    def blocks(self, Z: np.ndarray) -> np.ndarray:
        if Z.shape[1] % self.block_dim:
            raise DimensionMismatch(f"latent dim {Z.shape[1]} is not a multiple of block size {self.block_dim}")
        return Z.reshape(Z.shape[0], -1, self.block_dim)

    def _decode(self, Z):
        B = self.blocks(Z)
        return (B / np.linalg.norm(B, axis=2, keepdims=True)).reshape(Z.shape)

    def _jacobian(self, Z):
        B = self.blocks(Z)
        norms = np.linalg.norm(B, axis=2)
        U = B / norms[:, :, None]
        eye = np.eye(self.block_dim)
        blocks = (eye[None, None] - U[:, :, :, None] * U[:, :, None, :]) / norms[:, :, None, None]
        n, m, k = B.shape
        jac = np.zeros((n, m * k, m * k))
        for b in range(m):
            jac[:, b * k:(b + 1) * k, b * k:(b + 1) * k] = blocks[:, b]
        return jac


class QuadraticGraph(Decoder):
    """Graph embedding ψ(z) = (z, |z|²) of a paraboloid."""

    name = "quadratic-graph"

    def _decode(self, Z):
        return np.hstack([Z, np.sum(Z * Z, axis=1, keepdims=True)])

    def _jacobian(self, Z):
        n, l = Z.shape
        jac = np.zeros((n, l + 1, l))
        jac[:, :l, :] = np.eye(l)
        jac[:, l, :] = 2.0 * Z
        return jac


class CustomDecoder(Decoder):
    """User-supplied batched map and Jacobian."""

    name = "custom"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], jac: Callable[[np.ndarray], np.ndarray]):
        self.fn = fn
        self.jac = jac

    def _decode(self, Z):
        return self.fn(Z)

    def _jacobian(self, Z):
        return self.jac(Z)


def make_decoder(spec: str) -> Decoder:
    """Parse 'identity', 'linear:a,b;c,d', 'sphere-lift[:k]' or 'quadratic-graph'."""
    name, _, arg = spec.partition(":")
    name = name.strip()
    if name == "identity":
        return IdentityDecoder()
    if name == "linear":
        try:
            rows = [[float(v) for v in row.split(",")] for row in arg.split(";") if row.strip()]
            return LinearDecoder(np.array(rows))
        except ValueError as e:
            raise ConfigError(f"field 'decoder': bad linear matrix {arg!r}") from e
    if name == "sphere-lift":
        return SphereLift(int(arg) if arg else 3)
    if name == "quadratic-graph":
        return QuadraticGraph()
    raise ConfigError(f"field 'decoder': unknown decoder {spec!r}")
