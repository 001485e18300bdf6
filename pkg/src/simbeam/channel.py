"""Deterministic propagation operators and the statistical channel model.

The inter-layer attenuation matrices W^l and the antenna-to-layer-1 vectors
w_k^1 come from the Rayleigh-Sommerfeld diffraction coefficient; the user
channels are correlated Rayleigh with a sinc spatial correlation, so the
channel of user k is h_k ~ CN(0, beta_k * R).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericError
from .geometry import SimGeometry

# Eigenvalues of R below -PSD_TOL * N are treated as a hard failure.
PSD_TOL = 1e-8


@dataclass
class UserPopulation:
    """Large-scale parameters of the K served users."""

    distances: np.ndarray  # (K,) metres
    beta: np.ndarray       # (K,) path losses, 1e-3 / d^2
    sigma2: np.ndarray     # (K,) noise powers in watts


@dataclass
class ChannelModel:
    """Everything the optimizer needs to know about propagation.

    Attributes:
        W: list of L-1 inter-layer matrices; ``W[l - 2]`` maps layer l-1
           signals to layer l signals (l = 2..L).
        w1: (N, M) array, column k is the antenna-k-to-layer-1 vector.
        R: (N, N) spatial correlation, Hermitian PSD with unit diagonal.
        R_sqrt: Hermitian PSD square root of R.
        beta, sigma2, user_distances: per-user large-scale parameters.
    """

    W: list
    w1: np.ndarray
    R: np.ndarray
    R_sqrt: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    user_distances: np.ndarray
    L: int = field(init=False)

    def __post_init__(self):
        self.L = len(self.W) + 1

    @property
    def N(self) -> int:
        return self.w1.shape[0]

    @property
    def K(self) -> int:
        return len(self.beta)

    def W_for_layer(self, layer: int) -> np.ndarray:
        """Attenuation matrix W^layer for layer in 2..L."""
        if not 2 <= layer <= self.L:
            raise ValueError(f"W^l defined for l in 2..{self.L}, got {layer}")
        return self.W[layer - 2]


def rs_coefficient(geom: SimGeometry, distance, cos_incidence):
    """Rayleigh-Sommerfeld diffraction coefficient between two elements.

    Computes (d_x * d_y * cos / d) * (1 / (2 pi d) - j / lambda) * exp(j 2 pi d / lambda).
    Accepts scalars or broadcastable arrays.
    """
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("propagation distance must be positive")
    lam = geom.wavelength
    aperture = geom.d_x * geom.d_y * np.asarray(cos_incidence) / distance
    radial = 1.0 / (2.0 * np.pi * distance) - 1j / lam
    out = aperture * radial * np.exp(2j * np.pi * distance / lam)
    return complex(out) if out.ndim == 0 else out


def _pair_metrics(src_positions: np.ndarray, dst_positions: np.ndarray):
    # distance[j, i] and cos[j, i] from source i to destination j
    diff = dst_positions[:, None, :] - src_positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    return dist, diff[:, :, 0] / dist


def build_propagation(geom: SimGeometry):
    """Build the inter-layer matrices and antenna-to-layer-1 vectors.

    Returns:
        (W, w1): W is a list of L-1 matrices with W[l-2][n', n] the
        coefficient from atom n of layer l-1 to atom n' of layer l; w1 is
        (N, M) with w1[n, k] the coefficient from antenna k+1 to atom n+1.

    Every adjacent layer pair shares the same lattice, so all W^l are equal;
    the list holds L-1 references to one read-only array.
    """
    if geom.L >= 2:
        dist, cos = _pair_metrics(geom.atom_positions[0], geom.atom_positions[1])
        W_inter = rs_coefficient(geom, dist, cos)
        W_inter.setflags(write=False)
        W = [W_inter] * (geom.L - 1)
    else:
        W = []

    dist, cos = _pair_metrics(geom.antenna_positions, geom.atom_positions[0])
    w1 = rs_coefficient(geom, dist, cos)
    w1.setflags(write=False)
    return W, w1


def build_correlation(geom: SimGeometry) -> np.ndarray:
    """Isotropic-scattering correlation R[n, n'] = sinc(2 |u_n - u_n'| / lambda).

    Uses the normalized sinc, sin(pi x) / (pi x) with sinc(0) = 1, so atoms
    half a wavelength apart decorrelate exactly.
    """
    plane = geom.atom_positions[0]
    diff = plane[:, None, :] - plane[None, :, :]
    sep = np.linalg.norm(diff, axis=2)
    R = np.sinc(2.0 * sep / geom.wavelength)
    R.setflags(write=False)
    return R


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-PSD_TOL * N, 0) are clamped to zero; anything below
    that raises NumericError (the matrix is not a valid correlation).
    """
    N = R.shape[0]
    vals, vecs = np.linalg.eigh(R)
    if vals.min() < -PSD_TOL * N:
        raise NumericError(
            f"correlation matrix has eigenvalue {vals.min():.3e} < {-PSD_TOL * N:.3e}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def assign_users(seed: int, K: int, r_in: float, r_out: float,
                 sigma2_dbm: float = -80.0) -> UserPopulation:
    """Draw K user distances uniformly by area over an annulus.

    d = sqrt(r_in^2 + U * (r_out^2 - r_in^2)) gives uniform area density;
    path loss is beta_k = 1e-3 / d_k^2 and the noise power is shared.
    """
    if not 0 < r_in < r_out:
        raise ValueError(f"need 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x75E5)))
    u = rng.random(K)
    distances = np.sqrt(r_in**2 + u * (r_out**2 - r_in**2))
    beta = 1e-3 / distances**2
    sigma2 = np.full(K, dbm_to_watts(sigma2_dbm))
    return UserPopulation(distances=distances, beta=beta, sigma2=sigma2)


def build_channel_model(geom: SimGeometry, users: UserPopulation) -> ChannelModel:
    """Combine geometry-driven operators with per-user statistics.

    The stream-to-antenna map is index-to-index, which requires M = K.
    """
    K = len(users.beta)
    if geom.M != K:
        raise ValueError(f"stream mapping requires M = K, got M={geom.M}, K={K}")
    W, w1 = build_propagation(geom)
    R = build_correlation(geom)
    return ChannelModel(W=W, w1=w1, R=R, R_sqrt=psd_sqrt(R),
                        beta=users.beta.copy(), sigma2=users.sigma2.copy(),
                        user_distances=users.distances.copy())


def _draw_generator(seed: int, draw: int) -> np.random.Generator:
    # Philox substream per draw: results do not depend on how draws are
    # batched across threads.
    base = np.random.Philox(np.random.SeedSequence((int(seed), 0xD12A)))
    return np.random.Generator(base.jumped(draw))


def sample_channels(model: ChannelModel, seed: int, n_draws: int) -> np.ndarray:
    """Sample user channels h_k = sqrt(beta_k) R^{1/2} z, z ~ CN(0, I).

    Returns:
        (n_draws, K, N) complex array; draw j uses an independent
        counter-based substream of ``seed``.
    """
    N, K = model.N, model.K
    scale = np.sqrt(model.beta)
    out = np.empty((n_draws, K, N), dtype=complex)
    for j in range(n_draws):
        rng = _draw_generator(seed, j)
        z = (rng.standard_normal((K, N)) + 1j * rng.standard_normal((K, N))) / np.sqrt(2.0)
        out[j] = scale[:, None] * (z @ model.R_sqrt.T)
    return out
