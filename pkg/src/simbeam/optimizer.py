"""Alternating optimizer for joint power allocation and discrete phases.

Outer loop per iteration: closed-form receive-scalar and weight updates,
a Lagrangian-dual power step (bisection on the dual variable), then one
ADMM pass per layer that solves a regularized least-squares problem and
projects onto the b-bit phase grid.  A per-layer acceptance guard keeps the
surrogate-rate history non-decreasing, which discrete ADMM alone does not
guarantee.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cascade import CascadeOperator, PhaseStack, linearize_layer, materialize_G, suffix_operators
from .channel import ChannelModel
from .exceptions import NumericError
from .rate import PowerAlloc, correlation_quadratic, wmmse_objective

_PHASE_TAG = 0xF0A5


@dataclass
class AlgorithmConfig:
    """Knobs for one optimizer run.  ``b=None`` selects continuous phases."""

    b: int | None
    P_max: float
    seed: int = 0
    rate_tol: float = 1e-4       # relative outer stopping threshold
    max_outer_iters: int = 50
    # symmetric starts sit on a saddle whose escape takes a few iterations
    # with sub-tolerance rate changes, so the stop rule arms late
    min_outer_iters: int = 10
    power_tol: float = 1e-5      # absolute rate change, inner power loop
    power_max_iters: int = 20
    admm_tol: float = 1e-5       # absolute rate change, inner ADMM loop
    admm_max_iters: int = 100
    beta_penalty: float | None = None  # None: tr(B)/N per layer
    bisect_steps: int = 60


@dataclass
class HistoryRow:
    iteration: int
    rate: float
    objective: float
    t_ns: int


@dataclass
class WmmseState:
    """Current iterate of the alternating optimization."""

    power: PowerAlloc
    stack: PhaseStack
    u_w: np.ndarray
    rho_w: np.ndarray
    admm_x: np.ndarray
    admm_omega: np.ndarray
    beta_penalty: float = 0.0
    iteration: int = 0
    history: list = field(default_factory=list)


def initial_stack(b, L: int, N: int, seed: int) -> PhaseStack:
    """Seed-keyed uniform draw on the phase grid (shared with the random baseline).

    One continuous angle field is drawn per (seed, L) and quantized onto the
    b-bit grid, which is still uniform on the grid but keeps different bit
    depths comparable at the same seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), _PHASE_TAG, int(L))))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(L, N))
    if b is None:
        return PhaseStack(None, L, N, theta=theta)
    return PhaseStack(b, L, N, indices=nearest_grid_index(np.exp(1j * theta), b))


# ---------------------------------------------------------------------------
# closed-form u / rho / p updates


def _received_power(t: np.ndarray, model: ChannelModel, p: np.ndarray) -> np.ndarray:
    # D_k = sum_i p_i^2 g_i^H (beta_k R) g_i + sigma_k^2
    return model.beta * np.sum(p**2 * t) + model.sigma2


def _effective_scalar(t: np.ndarray, model: ChannelModel) -> np.ndarray:
    # s_k = ||R_k^{1/2} g_k||
    return np.sqrt(model.beta * t)


def closed_form_u(t: np.ndarray, model: ChannelModel, p: np.ndarray) -> np.ndarray:
    return _effective_scalar(t, model) * p / _received_power(t, model, p)


def mse_terms(t: np.ndarray, model: ChannelModel, p: np.ndarray, u: np.ndarray) -> np.ndarray:
    D = _received_power(t, model, p)
    s = _effective_scalar(t, model)
    return np.abs(u)**2 * D - 2.0 * np.real(u) * s * p + 1.0


def _rate_from_quads(t: np.ndarray, model: ChannelModel, p: np.ndarray) -> float:
    weighted = p**2 * t
    total = np.sum(weighted)
    sinr = model.beta * weighted / (model.beta * (total - weighted) + model.sigma2)
    return float(np.sum(np.log2(1.0 + sinr)))


def _quads(op: CascadeOperator, model: ChannelModel) -> np.ndarray:
    return correlation_quadratic(op.effective, model.R)


def update_u(state: WmmseState, model: ChannelModel, op: CascadeOperator | None = None) -> np.ndarray:
    """Closed-form receive scalar u_k = s_k p_k / D_k (complex dtype for generality)."""
    op = materialize_G(state.stack, model) if op is None else op
    return closed_form_u(_quads(op, model), model, state.power.p).astype(complex)


def update_rho(state: WmmseState, model: ChannelModel, op: CascadeOperator | None = None) -> np.ndarray:
    """MSE weights rho_k = 1 / e_k; with fresh u this equals 1 + SINR_k."""
    op = materialize_G(state.stack, model) if op is None else op
    e = mse_terms(_quads(op, model), model, state.power.p, state.u_w)
    if np.any(e <= 0):
        raise NumericError(f"MSE e_k = {e.min():.3e} <= 0; u is inconsistent with the state",
                           state=state)
    return 1.0 / e


def power_kkt_solve(t: np.ndarray, model: ChannelModel, u: np.ndarray, rho: np.ndarray,
                    P_max: float, bisect_steps: int = 60):
    """Dual-bisection power allocation.

    For dual variable lam, p_k(lam) clips
    rho_k Re{u_k} s_k / (sum_j rho_j |u_j|^2 g_k^H R_j g_k + lam)
    to [0, sqrt(P_max)]; lam is zero when that point is already feasible and
    otherwise bisected until the power budget is met with equality.

    Returns:
        (p, lam).
    """
    w_sum = float(np.sum(rho * np.abs(u)**2 * model.beta))
    a = w_sum * t
    bvec = rho * np.real(u) * _effective_scalar(t, model)
    cap = np.sqrt(P_max)

    def candidate(lam):
        denom = a + lam
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.where(denom > 0, bvec / np.where(denom > 0, denom, 1.0),
                           np.where(bvec > 0, np.inf, 0.0))
        return np.clip(raw, 0.0, cap)

    p = candidate(0.0)
    if np.sum(p**2) <= P_max:
        return p, 0.0
    hi = 1.0
    while np.sum(candidate(hi)**2) > P_max:
        hi *= 2.0
    lo = 0.0
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        if np.sum(candidate(mid)**2) > P_max:
            lo = mid
        else:
            hi = mid
    return candidate(hi), hi


def update_power(state: WmmseState, model: ChannelModel, op: CascadeOperator | None = None,
                 bisect_steps: int = 60) -> PowerAlloc:
    op = materialize_G(state.stack, model) if op is None else op
    p, _ = power_kkt_solve(_quads(op, model), model, state.u_w, state.rho_w,
                           state.power.P_max, bisect_steps)
    return PowerAlloc(p=p, P_max=state.power.P_max)


# ---------------------------------------------------------------------------
# per-layer quadratic and ADMM


def nearest_grid_index(z, b: int) -> np.ndarray:
    """Index of the grid angle 2 pi t / 2^b nearest to angle(z), ties to the smaller index."""
    ang = np.angle(np.asarray(z, dtype=complex))
    m = 2**b
    t_real = ang * (m / (2.0 * np.pi))
    t_lo = np.floor(t_real)
    frac = t_real - t_lo
    lo_idx = np.mod(t_lo, m).astype(np.int64)
    hi_idx = np.mod(t_lo + 1, m).astype(np.int64)
    idx = np.where(frac > 0.5, hi_idx, lo_idx)
    return np.where(frac == 0.5, np.minimum(lo_idx, hi_idx), idx)


def _project_parts(z, b):
    # returns (unit-modulus vector, stack payload: indices or raw angles)
    z = np.asarray(z, dtype=complex)
    if b is None:
        mag = np.abs(z)
        safe = np.where(mag > 0, mag, 1.0)
        x = np.where(mag > 0, z / safe, 1.0 + 0.0j)
        return x, np.angle(x)
    idx = nearest_grid_index(z, b)
    return np.exp(1j * idx * (2.0 * np.pi / 2**b)), idx


def project_discrete(z, b) -> np.ndarray:
    """Elementwise nearest point of the b-bit phase grid (zero projects to angle 0).

    ``b=None`` projects onto the continuous unit circle.
    """
    return _project_parts(z, b)[0]


def build_quadratic(state: WmmseState, model: ChannelModel, layer: int, *,
                    C_list=None):
    """Quadratic data (B, d) of the layer-restricted objective.

    Minimizing phi^H B phi - 2 Re{d^H phi} over layer ``layer`` is, up to the
    constant sum_k rho_k (sigma_k^2 |u_k|^2 + 1) - sum_k log2(rho_k), exactly
    the weighted-MSE objective evaluated at the current iterate.
    """
    K, N = model.K, model.N
    p = state.power.p
    if C_list is None:
        C_list = [linearize_layer(state.stack, model, layer, i, p[i - 1])
                  for i in range(1, K + 1)]
    u, rho = state.u_w, state.rho_w
    w_sum = float(np.sum(rho * np.abs(u)**2 * model.beta))

    B = np.zeros((N, N), dtype=complex)
    for C in C_list:
        B += C.conj().T @ (model.R @ C)
    B *= w_sum
    B = 0.5 * (B + B.conj().T)

    phi_l = state.stack.phi(layer)
    d = np.zeros(N, dtype=complex)
    for k in range(K):
        y = model.R_sqrt @ (C_list[k] @ phi_l)  # R^{1/2} g_k p_k
        norm_y = float(np.linalg.norm(y))
        if norm_y > 0.0 and u[k] != 0.0:
            # d^H phi reproduces rho_k Re{u_k} s_k p_k at the current phases
            d += (rho[k] * u[k] * np.sqrt(model.beta[k]) / norm_y) * (C_list[k].conj().T @ (model.R_sqrt @ y))
    return B, d


def admm_phase_step(x: np.ndarray, omega: np.ndarray, B: np.ndarray, d: np.ndarray,
                    beta_penalty: float, b):
    """One ADMM iteration: ridge solve, grid projection, dual update."""
    N = len(d)
    phi = np.linalg.solve(B + beta_penalty * np.eye(N), d + beta_penalty * (x + omega))
    x_new = project_discrete(phi - omega, b)
    omega_new = omega + x_new - phi
    return phi, x_new, omega_new


def default_beta_penalty(B: np.ndarray) -> float:
    tr = float(np.trace(B).real)
    return max(tr / B.shape[0], 1e-12 * tr + 1e-12)


def _weighted_cols(C_arr: np.ndarray, phi_vec: np.ndarray) -> np.ndarray:
    # column i = C_i phi = g_i p_i
    return np.einsum("inm,m->ni", C_arr, phi_vec)


def _rate_of_layer_phases(C_arr: np.ndarray, phi_vec: np.ndarray, model: ChannelModel) -> float:
    from .rate import rate_from_weighted
    return rate_from_weighted(_weighted_cols(C_arr, phi_vec), model)


def optimize_layer_phases(state: WmmseState, model: ChannelModel, layer: int,
                          config: AlgorithmConfig, *, C_list=None) -> bool:
    """Run the ADMM inner loop on one layer and apply the acceptance guard.

    The candidate on-grid phases replace layer ``layer`` only if they do not
    decrease the surrogate rate.  Returns True when the layer was updated.
    """
    if C_list is None:
        C_list = [linearize_layer(state.stack, model, layer, i, state.power.p[i - 1])
                  for i in range(1, model.K + 1)]
    B, d = build_quadratic(state, model, layer, C_list=C_list)
    beta_pen = config.beta_penalty if config.beta_penalty is not None else default_beta_penalty(B)

    C_arr = np.stack(C_list)
    incumbent = state.stack.phi(layer)
    incumbent_rate = _rate_of_layer_phases(C_arr, incumbent, model)

    # the stopping rule watches the ridge iterate phi, which keeps moving
    # while the dual accumulates toward the next on-grid flip of x
    x = incumbent
    omega = np.zeros(model.N, dtype=complex)
    f_phi_old = incumbent_rate
    for _ in range(config.admm_max_iters):
        phi_vec, x, omega = admm_phase_step(x, omega, B, d, beta_pen, config.b)
        f_phi = _rate_of_layer_phases(C_arr, phi_vec, model)
        if abs(f_phi - f_phi_old) < config.admm_tol:
            break
        f_phi_old = f_phi

    state.admm_x = x
    state.admm_omega = omega
    state.beta_penalty = beta_pen
    if _rate_of_layer_phases(C_arr, x, model) >= incumbent_rate:
        payload = np.angle(x) if config.b is None else nearest_grid_index(x, config.b)
        state.stack.set_layer(layer, payload)
        return True
    return False


# ---------------------------------------------------------------------------
# full algorithm


def run_joint_optimizer(model: ChannelModel, config: AlgorithmConfig):
    """Alternating optimization until the surrogate rate plateaus.

    Returns:
        (state, history): final iterate and one HistoryRow per outer
        iteration (row 0 is the initial point).
    """
    N, K, L = model.N, model.K, model.L
    stack = initial_stack(config.b, L, N, config.seed)
    power = PowerAlloc.uniform(K, config.P_max)

    op = materialize_G(stack, model)
    t = _quads(op, model)
    u = closed_form_u(t, model, power.p).astype(complex)
    rho = 1.0 / mse_terms(t, model, power.p, u)
    state = WmmseState(power=power, stack=stack, u_w=u, rho_w=rho,
                       admm_x=stack.phi(L).copy(), admm_omega=np.zeros(N, dtype=complex))

    t_start = time.perf_counter_ns()

    def record(iteration, op_now):
        rate = _rate_from_quads(_quads(op_now, model), model, state.power.p)
        g = wmmse_objective(op_now, model, state.power, state.u_w, state.rho_w)
        if not (np.isfinite(rate) and np.isfinite(g)):
            raise NumericError(f"non-finite objective at iteration {iteration} "
                               f"(rate={rate}, g={g})", state=state)
        state.history.append(HistoryRow(iteration=iteration, rate=rate, objective=g,
                                        t_ns=time.perf_counter_ns() - t_start))
        return rate

    prev_rate = record(0, op)

    for it in range(1, config.max_outer_iters + 1):
        t = _quads(op, model)
        state.u_w = closed_form_u(t, model, state.power.p).astype(complex)
        e = mse_terms(t, model, state.power.p, state.u_w)
        if np.any(e <= 0):
            raise NumericError("MSE became nonpositive", state=state)
        state.rho_w = 1.0 / e

        # inner power loop; the KKT solve is exact, so this settles immediately
        f_prev = _rate_from_quads(t, model, state.power.p)
        for _ in range(config.power_max_iters):
            p_new, _ = power_kkt_solve(t, model, state.u_w, state.rho_w,
                                       config.P_max, config.bisect_steps)
            state.power = PowerAlloc(p=p_new, P_max=config.P_max)
            f_new = _rate_from_quads(t, model, p_new)
            if abs(f_new - f_prev) < config.power_tol:
                break
            f_prev = f_new

        # ascending layer sweep with per-sweep suffix / prefix caches
        suffixes = suffix_operators(stack, model)
        prefixes = [model.w1[:, i] * state.power.p[i] for i in range(K)]
        for layer in range(1, L + 1):
            C_list = [suffixes[layer - 1] * v[None, :] for v in prefixes]
            optimize_layer_phases(state, model, layer, config, C_list=C_list)
            if layer < L:
                phi_now = stack.phi(layer)
                W_next = model.W_for_layer(layer + 1)
                prefixes = [W_next @ (phi_now * v) for v in prefixes]

        op = materialize_G(stack, model)
        state.iteration = it
        rate = record(it, op)
        # rate_tol = 0 disables early stopping (fixed-length histories)
        if (config.rate_tol > 0 and it >= config.min_outer_iters
                and abs(rate - prev_rate) <= config.rate_tol * max(abs(prev_rate), 1e-12)):
            break
        prev_rate = rate

    return state, state.history
