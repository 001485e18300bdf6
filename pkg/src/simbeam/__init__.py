"""Stacked-metasurface downlink beamforming: channel synthesis, statistical-CSI
rate evaluation, and joint power / discrete-phase optimization."""

from .baselines import BaselineResult, exhaustive_oracle, random_phase_baseline
from .cascade import CascadeOperator, PhaseStack, linearize_layer, materialize_G
from .channel import (ChannelModel, UserPopulation, assign_users, build_channel_model,
                      build_correlation, build_propagation, dbm_to_watts, psd_sqrt,
                      rs_coefficient, sample_channels)
from .config import ConfigError, ExperimentConfig, default_config, load_config, save_config
from .exceptions import NumericError
from .geometry import SimGeometry, build_geometry, propagation_metrics
from .optimizer import (AlgorithmConfig, WmmseState, admm_phase_step, build_quadratic,
                        nearest_grid_index, project_discrete, run_joint_optimizer, update_power,
                        update_rho, update_u)
from .rate import PowerAlloc, RateReport, mc_ergodic_rate, surrogate_rate, wmmse_objective

__version__ = "0.1.0"

__all__ = [
    "AlgorithmConfig", "BaselineResult", "CascadeOperator", "ChannelModel",
    "ConfigError", "ExperimentConfig", "NumericError", "PhaseStack", "PowerAlloc",
    "RateReport", "SimGeometry", "UserPopulation", "WmmseState", "admm_phase_step",
    "assign_users", "build_channel_model", "build_correlation", "build_geometry",
    "build_propagation", "build_quadratic", "dbm_to_watts", "default_config",
    "exhaustive_oracle", "linearize_layer", "load_config", "materialize_G",
    "mc_ergodic_rate", "nearest_grid_index", "project_discrete", "propagation_metrics",
    "psd_sqrt", "random_phase_baseline", "rs_coefficient", "run_joint_optimizer",
    "sample_channels", "save_config", "surrogate_rate", "update_power", "update_rho",
    "update_u", "wmmse_objective",
]
