"""Infinite-armed linear contextual bandits with varying-confidence-level UCB."""

__version__ = "0.1.0"

from .action_sets import ActionSet, BonusIndex, ConvexOptReport, index_gradient, maximize_linear, maximize_ucb, project
from .estimator import ConfidenceSchedule, SpdState, alpha, init_state, log_det, update, width
from .environment import Instance, RoundRecord, SetGenerator, make_instance, run_episode
from .harness import ConfigError, ExperimentConfig, PolicySpec, RunResult, load_config, parse_config, run_experiment
from .policies import Policy, PolicyConfig, make_policy

__all__ = [
    "ActionSet", "BonusIndex", "ConvexOptReport", "index_gradient", "maximize_linear", "maximize_ucb", "project",
    "ConfidenceSchedule", "SpdState", "alpha", "init_state", "log_det", "update", "width",
    "Instance", "RoundRecord", "SetGenerator", "make_instance", "run_episode",
    "ConfigError", "ExperimentConfig", "PolicySpec", "RunResult", "load_config", "parse_config", "run_experiment",
    "Policy", "PolicyConfig", "make_policy",
]
