"""Shared builders for small random test instances."""

import numpy as np

from simbeam.cascade import PhaseStack, materialize_G
from simbeam.channel import UserPopulation, build_channel_model
from simbeam.geometry import build_geometry
from simbeam.optimizer import WmmseState, closed_form_u, mse_terms
from simbeam.rate import PowerAlloc, correlation_quadratic

WAVELENGTH_2GHZ = 2.998e8 / 2.0e9


def toy_geometry(N=4, N_r=2, L=2, M=2, f_carrier=2.0e9, **kwargs):
    lam = 2.998e8 / f_carrier
    defaults = dict(M=M, N=N, N_r=N_r, L=L, f_carrier=f_carrier,
                    d_x=lam / 2, d_y=lam / 2, thickness=5 * lam)
    defaults.update(kwargs)
    return build_geometry(**defaults)


def toy_model(rng, N=4, N_r=2, L=2, K=2, sigma2=1e-11):
    """Small channel model with annulus-like user statistics."""
    geom = toy_geometry(N=N, N_r=N_r, L=L, M=K)
    distances = rng.uniform(60.0, 80.0, size=K)
    users = UserPopulation(distances=distances, beta=1e-3 / distances**2,
                           sigma2=np.full(K, sigma2))
    return geom, build_channel_model(geom, users)


def random_instance(rng, N=4, N_r=2, L=2, K=2, b=2, P_max=1.0):
    """Random (model, stack, power) triple plus a consistent WMMSE state."""
    _, model = toy_model(rng, N=N, N_r=N_r, L=L, K=K)
    if b is None:
        stack = PhaseStack(None, L, N, theta=rng.uniform(0, 2 * np.pi, (L, N)))
    else:
        stack = PhaseStack(b, L, N, indices=rng.integers(0, 2**b, (L, N)))
    weights = rng.dirichlet(np.ones(K)) * rng.uniform(0.3, 1.0)
    power = PowerAlloc(p=np.sqrt(weights * P_max), P_max=P_max)
    op = materialize_G(stack, model)
    t = correlation_quadratic(op.effective, model.R)
    u = closed_form_u(t, model, power.p).astype(complex)
    rho = 1.0 / mse_terms(t, model, power.p, u)
    state = WmmseState(power=power, stack=stack, u_w=u, rho_w=rho,
                       admm_x=stack.phi(L).copy(),
                       admm_omega=np.zeros(N, dtype=complex))
    return model, state, op
