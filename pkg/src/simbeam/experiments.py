"""Experiment orchestration: study runners, seed management, CSV emission.

Each study is a pure function of (config, seeds): workers are dispatched per
seed, results are merged in sorted key order, and every numeric output is a
deterministic function of the config hash and the seed list.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cascade import materialize_G
from .channel import ChannelModel, assign_users, build_channel_model
from .config import ExperimentConfig, atomic_write_text, config_hash
from .exceptions import NumericError
from .geometry import SPEED_OF_LIGHT, SimGeometry, build_geometry
from .optimizer import AlgorithmConfig, run_joint_optimizer
from .rate import RateReport, mc_ergodic_rate, surrogate_rate

DEFAULT_B_SET = (1, 2, 3, None)


@dataclass
class RunRecord:
    """One optimizer run plus its evaluation, for audit trails."""

    config_hash: str
    seed: int
    b: int | None
    L: int
    history: list
    final_report: RateReport
    t_channel_s: float
    t_optimize_s: float
    t_evaluate_s: float


def b_label(b) -> str:
    return "continuous" if b is None else str(b)


def _b_sort_key(b):
    return (1, 0) if b is None else (0, b)


def build_geometry_from_config(cfg: ExperimentConfig, L: int | None = None) -> SimGeometry:
    s = cfg.system
    lam = SPEED_OF_LIGHT / s.f_carrier_hz
    return build_geometry(M=s.M, N=s.N, N_r=s.N_r, L=s.L if L is None else L,
                          f_carrier=s.f_carrier_hz,
                          d_x=s.d_x_wavelengths * lam, d_y=s.d_y_wavelengths * lam,
                          thickness=s.thickness_wavelengths * lam,
                          lattice_step=s.lattice_step)


def build_system(cfg: ExperimentConfig, seed: int, L: int | None = None):
    """Geometry plus the seed's channel model (users are drawn from ``seed``)."""
    geom = build_geometry_from_config(cfg, L)
    users = assign_users(seed, cfg.system.K, cfg.users.r_in_m, cfg.users.r_out_m,
                         cfg.power.sigma2_dBm)
    return geom, build_channel_model(geom, users)


def algorithm_config(cfg: ExperimentConfig, *, b, seed: int,
                     rate_tol: float | None = None,
                     max_outer_iters: int | None = None) -> AlgorithmConfig:
    opt = cfg.optimizer
    return AlgorithmConfig(
        b=b, P_max=cfg.power.P_max_watts, seed=seed,
        rate_tol=opt.rate_tol if rate_tol is None else rate_tol,
        max_outer_iters=opt.max_outer_iters if max_outer_iters is None else max_outer_iters,
        power_tol=opt.power_tol, admm_tol=opt.admm_tol,
        admm_max_iters=opt.admm_max_iters, beta_penalty=opt.beta_penalty)


def run_single(cfg: ExperimentConfig, seed: int, *, b="config", L: int | None = None,
               with_mc: bool = True, rate_tol: float | None = None,
               max_outer_iters: int | None = None,
               model: ChannelModel | None = None) -> RunRecord:
    """One full run: build channel, optimize, evaluate the final stack."""
    if b == "config":
        b = cfg.system.b
    t0 = time.perf_counter()
    if model is None:
        _, model = build_system(cfg, seed, L)
    t1 = time.perf_counter()
    acfg = algorithm_config(cfg, b=b, seed=seed, rate_tol=rate_tol,
                            max_outer_iters=max_outer_iters)
    state, history = run_joint_optimizer(model, acfg)
    t2 = time.perf_counter()
    op = materialize_G(state.stack, model)
    report = surrogate_rate(op, model, state.power)
    if with_mc:
        mc, stderr = mc_ergodic_rate(op, model, state.power, seed, cfg.run.n_mc)
        report.mc_rate, report.mc_stderr, report.n_mc = mc, stderr, cfg.run.n_mc
    t3 = time.perf_counter()
    return RunRecord(config_hash=config_hash(cfg), seed=seed, b=b, L=model.L,
                     history=history, final_report=report,
                     t_channel_s=t1 - t0, t_optimize_s=t2 - t1, t_evaluate_s=t3 - t2)


# ---------------------------------------------------------------------------
# study workers (top-level so they pickle for the process pool)


def _convergence_worker(args):
    cfg, seed, b_set = args
    _, model = build_system(cfg, seed)
    series = {}
    for b in b_set:
        acfg = algorithm_config(cfg, b=b, seed=seed, rate_tol=0.0)
        _, history = run_joint_optimizer(model, acfg)
        series[b_label(b)] = [row.rate for row in history[1:]]
    return seed, series


def _layer_worker(args):
    cfg, seed, L, b_set = args
    _, model = build_system(cfg, seed, L)
    finals = {}
    for b in b_set:
        # fixed-length runs: study points should not depend on the stop rule
        acfg = algorithm_config(cfg, b=b, seed=seed, rate_tol=0.0)
        _, history = run_joint_optimizer(model, acfg)
        finals[b_label(b)] = history[-1].rate
    return (seed, L), finals


def _map_tasks(worker, tasks, threads: int):
    if threads <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks))


# ---------------------------------------------------------------------------
# studies


def run_convergence_study(cfg: ExperimentConfig, *, b_set=DEFAULT_B_SET, threads: int = 1):
    """Mean-over-seeds rate per iteration, one series per bit depth.

    Every run executes exactly ``optimizer.max_outer_iters`` outer iterations
    (early stopping disabled) so the series share a common length.

    Returns:
        (fieldnames, rows) with one row per (b, iteration).
    """
    seeds = sorted(cfg.run.seeds)
    results = dict(_map_tasks(_convergence_worker, [(cfg, s, tuple(b_set)) for s in seeds],
                              threads))
    n_iters = cfg.optimizer.max_outer_iters
    rows = []
    for b in sorted(b_set, key=_b_sort_key):
        label = b_label(b)
        per_seed = np.array([results[s][label] for s in seeds])  # (seeds, iters)
        mean = per_seed.mean(axis=0)
        for it in range(1, n_iters + 1):
            rows.append({"b": label, "iteration": it, "mean_rate": float(mean[it - 1])})
    return ["b", "iteration", "mean_rate"], rows


def run_layer_sweep(cfg: ExperimentConfig, L_list, *, b_set=(1, 2, 3), threads: int = 1):
    """Mean final rate per (L, b) over the config's seeds."""
    L_list = list(L_list)
    if L_list != sorted(L_list):
        raise ValueError("L_list must be ascending")
    seeds = sorted(cfg.run.seeds)
    tasks = [(cfg, s, L, tuple(b_set)) for L in L_list for s in seeds]
    results = dict(_map_tasks(_layer_worker, tasks, threads))
    rows = []
    for L in L_list:
        for b in sorted(b_set, key=_b_sort_key):
            finals = np.array([results[(s, L)][b_label(b)] for s in seeds])
            stderr = float(finals.std(ddof=1) / np.sqrt(len(finals))) if len(finals) > 1 else 0.0
            rows.append({"L": L, "b": b_label(b), "mean_rate": float(finals.mean()),
                         "stderr_rate": stderr})
    return ["L", "b", "mean_rate", "stderr_rate"], rows


def run_timing_study(cfg: ExperimentConfig, L_list, *, reps: int = 30, seed: int | None = None):
    """Wall-clock of the full optimization per layer count.

    Each point repeats the same seeded run ``reps`` times (>= 30) after one
    untimed warm-up; the math path is deterministic, so all repetitions must
    produce the same rate, and only the timing varies.
    """
    if reps < 30:
        raise ValueError(f"timing needs at least 30 repetitions, got {reps}")
    seed = cfg.run.seeds[0] if seed is None else seed
    rows = []
    for L in sorted(L_list):
        _, model = build_system(cfg, seed, L)
        acfg = algorithm_config(cfg, b=cfg.system.b, seed=seed, rate_tol=0.0)
        run_joint_optimizer(model, acfg)  # warm-up
        totals = np.empty(reps)
        rates = np.empty(reps)
        iters = None
        for r in range(reps):
            t0 = time.perf_counter()
            state, history = run_joint_optimizer(model, acfg)
            totals[r] = time.perf_counter() - t0
            rates[r] = history[-1].rate
            iters = state.iteration
        if not np.all(rates == rates[0]):
            raise NumericError(f"timing repetitions disagree on the rate at L={L}")
        rows.append({"L": L, "reps": reps, "outer_iters": iters,
                     "mean_total_s": float(totals.mean()),
                     "std_total_s": float(totals.std(ddof=1)),
                     "mean_iter_s": float(totals.mean() / iters),
                     "final_rate": float(rates[0])})
    return ["L", "reps", "outer_iters", "mean_total_s", "std_total_s",
            "mean_iter_s", "final_rate"], rows


def toy_oracle_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """Shrink a config to the exhaustive-oracle scale (N=2, L=1, b=1, K=2)."""
    import copy

    toy = copy.deepcopy(cfg)
    toy.system.K = toy.system.M = 2
    toy.system.N = 2
    toy.system.N_r = 2
    toy.system.L = 1
    toy.system.b = 1
    return toy


def run_oracle_check(cfg: ExperimentConfig, seeds=None):
    """Proposed algorithm vs the exhaustive oracle at toy scale, per seed."""
    from .baselines import default_power_grid, exhaustive_oracle

    toy = toy_oracle_config(cfg)
    seeds = sorted(toy.run.seeds if seeds is None else seeds)
    P_max = toy.power.P_max_watts
    grid = default_power_grid(toy.system.K, P_max)
    rows = []
    for seed in seeds:
        _, model = build_system(toy, seed)
        acfg = algorithm_config(toy, b=1, seed=seed)
        state, history = run_joint_optimizer(model, acfg)
        oracle = exhaustive_oracle(model, acfg, power_grid=grid)
        rows.append({"seed": seed,
                     "proposed_rate": history[-1].rate,
                     "oracle_rate": oracle.best_rate,
                     "ratio": history[-1].rate / oracle.best_rate})
    return ["seed", "proposed_rate", "oracle_rate", "ratio"], rows


def emit_csv(rows, fieldnames, path) -> None:
    """Write rows atomically: header first, fixed column order, LF endings."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    atomic_write_text(buf.getvalue(), path)


def study_output_path(cfg: ExperimentConfig, name: str) -> str:
    return os.path.join(cfg.run.output_dir, f"{name}.csv")
