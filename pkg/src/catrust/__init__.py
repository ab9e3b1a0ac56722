"""Trustee-side CA trust, the FIRE model, and a simulation testbed comparing them."""
from .backend import AVAILABLE as BACKENDS, run_simulation
from .ca import CaParams, CaVariant, PerformanceLevel, TaskSpec
from .fire import FireParams
from .harness import ExperimentSpec, aggregate, experiment, export, rank, run_experiment
from .stats import welch_t_test
from .world import ConsumerGroup, DynamicsConfig, WorldConfig

__version__ = "0.1.0"

__all__ = [
    "BACKENDS", "CaParams", "CaVariant", "ConsumerGroup", "DynamicsConfig", "ExperimentSpec",
    "FireParams", "PerformanceLevel", "TaskSpec", "WorldConfig", "aggregate", "experiment",
    "export", "rank", "run_experiment", "run_simulation", "welch_t_test",
]
