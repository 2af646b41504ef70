"""Local energies W(z, z̃) approximating squared Riemannian distances.

Each energy is evaluated on stacked pairs (rows of Z0, Z1) and returns the
values together with the gradients in both slots. The mixed derivative
∂_{z̃}(∂_z W) is also available; the exponential map needs it.
"""

from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np

from config.schemas import EnergyConfig
from geometry.decoders import Decoder, IdentityDecoder, SphereLift, make_decoder
from utils.errors import AntipodalBlock, DimensionMismatch

# dot products closer to -1 than this make the spherical gradient singular
ANTIPODAL_TOL = 1e-9
# switch to the series expansion of arccos(t)^2 derivatives above 1 - SERIES_BAND
SERIES_BAND = 1e-6

EnergyEval = Tuple[np.ndarray, np.ndarray, np.ndarray]


def _pairs(z, zt) -> Tuple[np.ndarray, np.ndarray, bool]:
    Z0 = np.asarray(z, dtype=float)
    Z1 = np.asarray(zt, dtype=float)
    if Z0.shape != Z1.shape:
        raise DimensionMismatch(f"energy arguments differ in shape: {Z0.shape} vs {Z1.shape}")
    single = Z0.ndim == 1
    return np.atleast_2d(Z0), np.atleast_2d(Z1), single


class LocalEnergy(ABC):
    """Symmetric, nonnegative W with W(z, z) = 0."""

    name = "energy"

    @abstractmethod
    def evaluate(self, Z0: np.ndarray, Z1: np.ndarray) -> EnergyEval:
        """Values (n,) and gradients (n, l) in the first and second slot."""

    @abstractmethod
    def mixed_hessian(self, Z0: np.ndarray, Z1: np.ndarray) -> np.ndarray:
        """∂_{z̃}(∂_z W)(z, z̃) for each row, shape (n, l, l)."""

    def values(self, Z0: np.ndarray, Z1: np.ndarray) -> np.ndarray:
        return self.evaluate(Z0, Z1)[0]

    def __call__(self, z, zt) -> Tuple:
        """Value and both gradients for a single pair or a batch of pairs."""
        Z0, Z1, single = _pairs(z, zt)
        vals, g0, g1 = self.evaluate(Z0, Z1)
        if single:
            return float(vals[0]), g0[0], g1[0]
        return vals, g0, g1


class EuclideanEnergy(LocalEnergy):
    """W_E(z, z̃) = |z̃ − z|², the energy of a Hookean spring."""

    name = "euclid"

    def evaluate(self, Z0, Z1):
        d = Z1 - Z0
        return np.sum(d * d, axis=1), -2.0 * d, 2.0 * d

    def mixed_hessian(self, Z0, Z1):
        n, l = Z0.shape
        return np.broadcast_to(-2.0 * np.eye(l), (n, l, l)).copy()


class PullbackEnergy(LocalEnergy):
    """W_PB(z, z̃) = scale · |ψ(z) − ψ(z̃)|²."""

    name = "pullback"

    def __init__(self, decoder: Decoder, scale: float = 1.0):
        self.decoder = decoder
        self.scale = scale

    def evaluate(self, Z0, Z1):
        e = self.decoder.decode(Z0) - self.decoder.decode(Z1)
        J0 = self.decoder.jacobian(Z0)
        J1 = self.decoder.jacobian(Z1)
        vals = self.scale * np.sum(e * e, axis=1)
        g0 = 2.0 * self.scale * np.einsum("nij,ni->nj", J0, e)
        g1 = -2.0 * self.scale * np.einsum("nij,ni->nj", J1, e)
        return vals, g0, g1

    def mixed_hessian(self, Z0, Z1):
        J0 = self.decoder.jacobian(Z0)
        J1 = self.decoder.jacobian(Z1)
        return -2.0 * self.scale * np.einsum("nki,nkj->nij", J0, J1)


class KLGaussianEnergy(PullbackEnergy):
    """KL divergence of fixed-variance Gaussian decoders: ½|μ(z) − μ(z̃)|²."""

    name = "kl-gauss"

    def __init__(self, mean_map: Decoder):
        super().__init__(mean_map, scale=0.5)


def _arccos_sq_derivatives(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """First and second derivative of arccos(t)² with the removable singularity at t = 1 filled in."""
    t = np.clip(t, -1.0 + ANTIPODAL_TOL, 1.0)
    near = t > 1.0 - SERIES_BAND
    eps = 1.0 - t
    safe = np.where(near, 0.0, t)
    angle = np.arccos(safe)
    sine = np.sqrt(1.0 - safe * safe)
    ratio = angle / sine
    d1 = np.where(near, -2.0 * (1.0 + eps / 3.0), -2.0 * ratio)
    d2 = np.where(
        near,
        2.0 / 3.0 + 8.0 * eps / 15.0,
        2.0 * (1.0 - safe * ratio) / (1.0 - safe * safe),
    )
    return d1, d2


class ProductSphereEnergy(LocalEnergy):
    """Sum of squared great-circle angles between decoded unit blocks.

    Decoder outputs are split into blocks of `block_dim` and renormalised, so the
    energy is well defined for any decoder whose output dimension is a multiple
    of the block size.
    """

    name = "product-sphere"

    def __init__(self, decoder: Optional[Decoder] = None, block_dim: int = 3):
        self.decoder = decoder or SphereLift(block_dim)
        self.block_dim = block_dim

    def _blocks(self, Z):
        X = self.decoder.decode(Z)
        if X.shape[1] % self.block_dim:
            raise DimensionMismatch(f"decoder output {X.shape[1]} not a multiple of block size {self.block_dim}")
        B = X.reshape(X.shape[0], -1, self.block_dim)
        norms = np.linalg.norm(B, axis=2)
        return B / norms[:, :, None], norms

    def distances(self, Z0, Z1) -> np.ndarray:
        """Per-block great-circle angles, shape (n, m)."""
        U0, _ = self._blocks(Z0)
        U1, _ = self._blocks(Z1)
        t = np.clip(np.sum(U0 * U1, axis=2), -1.0, 1.0)
        return np.arccos(t)

    def values(self, Z0, Z1):
        return np.sum(self.distances(Z0, Z1) ** 2, axis=1)

    def _dots(self, U0, U1):
        t = np.sum(U0 * U1, axis=2)
        if np.any(t <= -1.0 + ANTIPODAL_TOL):
            raise AntipodalBlock("antipodal block pair: spherical distance gradient is singular")
        return np.minimum(t, 1.0)

    def evaluate(self, Z0, Z1):
        vals = self.values(Z0, Z1)
        U0, n0 = self._blocks(Z0)
        U1, n1 = self._blocks(Z1)
        t = self._dots(U0, U1)
        d1, _ = _arccos_sq_derivatives(t)
        gx0 = (d1 / n0)[:, :, None] * (U1 - t[:, :, None] * U0)
        gx1 = (d1 / n1)[:, :, None] * (U0 - t[:, :, None] * U1)
        n = Z0.shape[0]
        J0 = self.decoder.jacobian(Z0)
        J1 = self.decoder.jacobian(Z1)
        g0 = np.einsum("nij,ni->nj", J0, gx0.reshape(n, -1))
        g1 = np.einsum("nij,ni->nj", J1, gx1.reshape(n, -1))
        return vals, g0, g1

    def mixed_hessian(self, Z0, Z1):
        U0, n0 = self._blocks(Z0)
        U1, n1 = self._blocks(Z1)
        t = self._dots(U0, U1)
        d1, d2 = _arccos_sq_derivatives(t)
        k = self.block_dim
        eye = np.eye(k)
        P1 = (eye[None, None] - U1[..., :, None] * U1[..., None, :]) / n1[..., None, None]
        grad_t = np.einsum("nbij,nbj->nbi", P1, U0)
        lhs = d2[..., None] * (U1 - t[..., None] * U0) - d1[..., None] * U0
        M = (lhs[..., :, None] * grad_t[..., None, :] + d1[..., None, None] * P1) / n0[..., None, None]
        n, m = t.shape
        block = np.zeros((n, m * k, m * k))
        for b in range(m):
            block[:, b * k:(b + 1) * k, b * k:(b + 1) * k] = M[:, b]
        J0 = self.decoder.jacobian(Z0)
        J1 = self.decoder.jacobian(Z1)
        return np.einsum("nki,nkl,nlj->nij", J0, block, J1)


def w_euclid(z, zt):
    """|z̃ − z|² with gradients (∂_z, ∂_{z̃})."""
    return EuclideanEnergy()(z, zt)


def w_pullback(decoder: Decoder, z, zt):
    """|ψ(z) − ψ(z̃)|² with gradients."""
    return PullbackEnergy(decoder)(z, zt)


def w_product_sphere(decoder: Decoder, z, zt, value_only: bool = False):
    """Σ_i arccos(ψ(z)_i · ψ(z̃)_i)² with gradients; value_only skips the gradient."""
    energy = ProductSphereEnergy(decoder)
    if value_only:
        Z0, Z1, single = _pairs(z, zt)
        vals = energy.values(Z0, Z1)
        return float(vals[0]) if single else vals
    return energy(z, zt)


def w_kl_gaussian(mean_map: Decoder, z, zt):
    """½|μ(z) − μ(z̃)|² with gradients."""
    return KLGaussianEnergy(mean_map)(z, zt)


def make_energy(cfg: EnergyConfig) -> LocalEnergy:
    """Energy from its config string and decoder spec."""
    if cfg.name == "euclid":
        return EuclideanEnergy()
    decoder = make_decoder(cfg.decoder)
    if cfg.name == "pullback":
        return PullbackEnergy(decoder)
    if cfg.name == "kl-gauss":
        return KLGaussianEnergy(decoder)
    if isinstance(decoder, IdentityDecoder):
        decoder = SphereLift(3)
    block = decoder.block_dim if isinstance(decoder, SphereLift) else 3
    return ProductSphereEnergy(decoder, block_dim=block)
