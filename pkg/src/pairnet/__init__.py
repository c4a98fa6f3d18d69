"""pairnet: N-pair MISO interference networks under channel perturbation.

A deterministic simulator and analysis library: directed-graph modelling of
transceiver pairs, MRT/WMMSE precoder controllers, count- and budget-limited
adversarial perturbations of the channel tensor, and attack detection by
min-max Kolmogorov-Smirnov fitting of the channel-eigenvalue distribution.
"""

__version__ = "0.1.0"

from .netmodel import (ChannelTensor, ConfigError, GraphModel, NetworkTopology,
                       SimConfig, build_graph, generate_network, path_loss_db,
                       qoc, qoc_per_pair, sample_channels, sample_topology,
                       sinr, sinr_all)
from .control import (ControllerSpec, PrecoderSet, WmmseInfo,
                      controller_precoders, mrt_precoders, wmmse_precoders)
from .attack import (ATTACK_KINDS, AttackConfig, AttackReport, apply_attack,
                     bc_edge, bc_vertex, bp_edge, bp_vertex, channel_gain,
                     single_bc, uniform_bp, upper_bound_bc)
from .statfit import (DEFAULT_ZOO, CdfContractError, DetectionVerdict,
                      DistributionFamily, EigenSample, FitResult,
                      UnsupportedAlphaError, best_fit, channel_eigenvalues,
                      detect, empirical_cdf, family_by_id, fit_family,
                      johnson_su_cdf, johnson_su_logpdf, johnson_su_pdf,
                      ks_statistic, lilliefors_dcrit, pool_eigenvalues)
from .campaign import Campaign, run_eigen_study, run_qoc_sweep, sweep_points

__all__ = [
    "__version__",
    # netmodel
    "ChannelTensor", "ConfigError", "GraphModel", "NetworkTopology",
    "SimConfig", "build_graph", "generate_network", "path_loss_db", "qoc",
    "qoc_per_pair", "sample_channels", "sample_topology", "sinr", "sinr_all",
    # control
    "ControllerSpec", "PrecoderSet", "WmmseInfo", "controller_precoders",
    "mrt_precoders", "wmmse_precoders",
    # attack
    "ATTACK_KINDS", "AttackConfig", "AttackReport", "apply_attack", "bc_edge",
    "bc_vertex", "bp_edge", "bp_vertex", "channel_gain", "single_bc",
    "uniform_bp", "upper_bound_bc",
    # statfit
    "DEFAULT_ZOO", "CdfContractError", "DetectionVerdict",
    "DistributionFamily", "EigenSample", "FitResult", "UnsupportedAlphaError",
    "best_fit", "channel_eigenvalues", "detect", "empirical_cdf",
    "family_by_id", "fit_family", "johnson_su_cdf", "johnson_su_logpdf",
    "johnson_su_pdf", "ks_statistic", "lilliefors_dcrit", "pool_eigenvalues",
    # campaign
    "Campaign", "run_eigen_study", "run_qoc_sweep", "sweep_points",
]
