"""Discrete-time simulator of information dissemination in sparse mobile
wireless networks, where nodes beamform based on a predicted measure of
how stable their neighborhood is under truncated power-law mobility."""

__version__ = "0.1.0"

from .engine import ExperimentConfig, run_once, run_experiment, sweep_parameter

__all__ = [
    "ExperimentConfig",
    "run_once",
    "run_experiment",
    "sweep_parameter",
    "__version__",
]
