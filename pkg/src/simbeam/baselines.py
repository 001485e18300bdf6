"""Reference points: random on-grid phases and a toy-scale exhaustive oracle."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from .cascade import PhaseStack, materialize_G
from .channel import ChannelModel
from .optimizer import AlgorithmConfig, initial_stack
from .rate import PowerAlloc, surrogate_rate

MAX_ORACLE_STACKS = 2**12


@dataclass
class BaselineResult:
    name: str
    surrogate_rate: float
    config_hash: str
    seed: int


@dataclass
class OracleResult:
    best_rate: float
    best_indices: np.ndarray  # (L, N)
    best_power: np.ndarray    # (K,) amplitudes
    n_stacks: int


def _config_hash(config: AlgorithmConfig) -> str:
    text = repr(sorted(vars(config).items()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def random_phase_baseline(model: ChannelModel, config: AlgorithmConfig, seed: int) -> BaselineResult:
    """Uniform on-grid phases and a uniform power split.

    Draws exactly the stack the optimizer would start from at this seed, so
    the optimized rate dominates this baseline by construction of the
    acceptance guard.
    """
    stack = initial_stack(config.b, model.L, model.N, seed)
    power = PowerAlloc.uniform(model.K, config.P_max)
    report = surrogate_rate(materialize_G(stack, model), model, power)
    return BaselineResult(name="random_phase", surrogate_rate=report.surrogate_sum_rate,
                          config_hash=_config_hash(config), seed=seed)


def default_power_grid(K: int, P_max: float) -> np.ndarray:
    """Uniform split plus eight fixed Dirichlet splits, as amplitude rows.

    A coarse stand-in for continuous power enumeration; the oracle over this
    grid lower-bounds the true optimum.
    """
    rng = np.random.default_rng(np.random.SeedSequence((0xD161, K)))
    weights = np.vstack([np.full((1, K), 1.0 / K), rng.dirichlet(np.ones(K), size=8)])
    return np.sqrt(weights * P_max)


def exhaustive_oracle(model: ChannelModel, config: AlgorithmConfig,
                      power_grid: np.ndarray | None = None) -> OracleResult:
    """Enumerate every discrete stack against a finite power grid.

    Only meaningful at toy scale: rejects searches beyond 2^12 stacks.
    Ties resolve to the lexicographically smallest stack index vector.
    """
    if config.b is None:
        raise ValueError("the exhaustive oracle needs a finite bit depth")
    L, N, K = model.L, model.N, model.K
    n_stacks = (2**config.b) ** (N * L)
    if n_stacks > MAX_ORACLE_STACKS:
        raise ValueError(f"search space of {n_stacks} stacks exceeds {MAX_ORACLE_STACKS}")
    if power_grid is None:
        power_grid = default_power_grid(K, config.P_max)
    powers = [PowerAlloc(p=row, P_max=config.P_max) for row in power_grid]

    best_rate = -np.inf
    best_indices = None
    best_power = None
    for flat in itertools.product(range(2**config.b), repeat=N * L):
        stack = PhaseStack(config.b, L, N, indices=np.reshape(flat, (L, N)))
        op = materialize_G(stack, model)
        for power in powers:
            rate = surrogate_rate(op, model, power).surrogate_sum_rate
            if rate > best_rate:
                best_rate = rate
                best_indices = np.reshape(flat, (L, N))
                best_power = power.p.copy()
    return OracleResult(best_rate=float(best_rate), best_indices=best_indices,
                        best_power=best_power, n_stacks=n_stacks)
