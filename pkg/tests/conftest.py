"""Session-scoped study data shared by the acceptance and example tests."""

import time

import numpy as np
import pytest

from simbeam.config import default_config
from simbeam.experiments import algorithm_config, build_system, run_layer_sweep
from simbeam.optimizer import run_joint_optimizer

B_ARMS = (1, 2, 3, None)


@pytest.fixture(scope="session")
def l3_histories():
    """Rate histories at the reference config (N=49, L=3), 20 seeds x 4 bit
    depths x 200 fixed outer iterations.

    Returns a dict with one (seeds, 201) array per bit depth plus the wall
    time under "elapsed".
    """
    t0 = time.perf_counter()
    cfg = default_config()
    out = {b: [] for b in B_ARMS}
    for seed in cfg.run.seeds:
        _, model = build_system(cfg, seed, 3)
        for b in B_ARMS:
            acfg = algorithm_config(cfg, b=b, seed=seed, rate_tol=0.0,
                                    max_outer_iters=200)
            _, history = run_joint_optimizer(model, acfg)
            out[b].append([row.rate for row in history])
    data = {b: np.array(rows) for b, rows in out.items()}
    data["elapsed"] = time.perf_counter() - t0
    return data


@pytest.fixture(scope="session")
def layer_sweep_rows():
    """Layer sweep rows at the reference config, L = 1..5, b in {1, 2, 3}.

    Returns (rows, elapsed_seconds).
    """
    t0 = time.perf_counter()
    cfg = default_config()
    _, rows = run_layer_sweep(cfg, [1, 2, 3, 4, 5], b_set=(1, 2, 3))
    return rows, time.perf_counter() - t0
