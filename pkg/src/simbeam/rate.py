"""Sum-rate evaluation under statistical CSI.

Three views of the same link: the closed-form surrogate built from the
per-user quadratic forms g_k^H (beta_k R) g_k, the Monte Carlo ergodic rate
it approximates, and the weighted-MSE objective whose minimization is
equivalent to surrogate-rate maximization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cascade import CascadeOperator
from .channel import ChannelModel, _draw_generator
from .exceptions import NumericError

# Quadratic forms of a Hermitian matrix must be real; larger relative
# imaginary parts indicate a broken correlation matrix.
HERMITIAN_TOL = 1e-9


@dataclass
class PowerAlloc:
    """Per-user transmit amplitudes p_k (so user k radiates p_k^2 watts)."""

    p: np.ndarray
    P_max: float

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0):
            raise ValueError("amplitudes must be nonnegative")
        total = float(np.sum(self.p**2))
        if total > self.P_max * (1.0 + 1e-9):
            raise ValueError(f"sum p^2 = {total} exceeds P_max = {self.P_max}")

    @classmethod
    def uniform(cls, K: int, P_max: float) -> "PowerAlloc":
        return cls(p=np.full(K, np.sqrt(P_max / K)), P_max=P_max)


@dataclass
class RateReport:
    """Surrogate sum rate plus optional Monte Carlo cross-check."""

    surrogate_sum_rate: float
    signal: np.ndarray        # (K,) S_k in watts
    interference: np.ndarray  # (K,) I_k in watts
    sinr: np.ndarray          # (K,)
    mc_rate: float | None = None
    mc_stderr: float | None = None
    n_mc: int = 0


def correlation_quadratic(g_cols: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Real quadratic forms t_i = g_i^H R g_i for the columns of ``g_cols``."""
    quad = np.einsum("ni,ni->i", g_cols.conj(), R @ g_cols)
    bad = np.abs(quad.imag) > HERMITIAN_TOL * (np.abs(quad.real) + 1e-300)
    if np.any(bad):
        raise NumericError("quadratic form has a non-negligible imaginary part; "
                           "correlation matrix is not Hermitian")
    # R is PSD, so true values are nonnegative; clamp float dust.
    return np.maximum(quad.real, 0.0)


def sinr_terms(g_cols: np.ndarray, model: ChannelModel, p: np.ndarray):
    """Signal and interference powers (S_k, I_k) for effective vectors g_k.

    S_k = p_k^2 g_k^H (beta_k R) g_k and I_k sums the same quadratic form
    over the interfering streams.
    """
    t = correlation_quadratic(g_cols, model.R)
    weighted = p**2 * t
    total = np.sum(weighted)
    S = model.beta * weighted
    I = model.beta * (total - weighted)
    return S, I


def surrogate_rate(op: CascadeOperator, model: ChannelModel, power: PowerAlloc) -> RateReport:
    """Closed-form statistical-CSI sum rate sum_k log2(1 + S_k / (I_k + sigma_k^2))."""
    S, I = sinr_terms(op.effective, model, power.p)
    sinr = S / (I + model.sigma2)
    return RateReport(surrogate_sum_rate=float(np.sum(np.log2(1.0 + sinr))),
                      signal=S, interference=I, sinr=sinr)


def rate_from_weighted(weighted_cols: np.ndarray, model: ChannelModel) -> float:
    """Fast surrogate evaluation when column i already holds g_i p_i."""
    t = correlation_quadratic(weighted_cols, model.R)
    total = np.sum(t)
    sinr = model.beta * t / (model.beta * (total - t) + model.sigma2)
    return float(np.sum(np.log2(1.0 + sinr)))


def mc_ergodic_rate(op: CascadeOperator, model: ChannelModel, power: PowerAlloc,
                    seed: int, n_draws: int = 2000):
    """Monte Carlo ergodic sum rate over channel draws.

    Each draw evaluates the instantaneous SINR
    |p_k g_k^H h_k|^2 / (sum_{i != k} |p_i g_i^H h_k|^2 + sigma_k^2)
    with per-draw counter-based substreams of ``seed``.

    Returns:
        (mean, stderr) of the per-draw sum rate, in bits/s/Hz.
    """
    if n_draws < 2:
        raise ValueError("need at least two draws for a standard error")
    K = model.K
    weighted = op.effective * power.p[None, :]  # column i = g_i p_i
    scale = np.sqrt(model.beta)
    samples = np.empty(n_draws)
    for j in range(n_draws):
        rng = _draw_generator(seed, j)
        z = (rng.standard_normal((K, model.N)) + 1j * rng.standard_normal((K, model.N))) / np.sqrt(2.0)
        h = scale[:, None] * (z @ model.R_sqrt.T)  # row k = h_k
        cross = np.abs(h.conj() @ weighted) ** 2   # [k, i] = |p_i g_i^H h_k|^2
        desired = np.diag(cross)
        interference = cross.sum(axis=1) - desired
        samples[j] = np.sum(np.log2(1.0 + desired / (interference + model.sigma2)))
    return float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(n_draws))


def wmmse_objective(op: CascadeOperator, model: ChannelModel, power: PowerAlloc,
                    u_w: np.ndarray, rho_w: np.ndarray) -> float:
    """Weighted-MSE surrogate objective sum_k rho_k e_k - log2(rho_k).

    The per-user MSE uses the scalar effective channel s_k = ||R_k^{1/2} g_k||:
    e_k = |u_k|^2 (D_k) - 2 Re{u_k} s_k p_k + 1 with D_k the total received
    power at user k including noise.  With u and rho at their closed-form
    optima this equals K minus the surrogate sum rate.
    """
    rho_w = np.asarray(rho_w, dtype=float)
    if np.any(rho_w <= 0):
        raise ValueError("weights rho must be positive")
    t = correlation_quadratic(op.effective, model.R)
    D = model.beta * np.sum(power.p**2 * t) + model.sigma2
    s = np.sqrt(model.beta * t)
    e = np.abs(u_w)**2 * D - 2.0 * np.real(u_w) * s * power.p + 1.0
    return float(np.sum(rho_w * e - np.log2(rho_w)))
