"""Experiment harness: configuration, seeded runs, replication, scaling, output."""
from tslab.harness.config import ExperimentConfig, load_config
from tslab.harness.output import emit_output
from tslab.harness.runner import RunResult, replicate, run_experiment
from tslab.harness.scaling import ScalingReport, fit_power_law, scaling_study

__all__ = [
    "ExperimentConfig",
    "load_config",
    "emit_output",
    "RunResult",
    "replicate",
    "run_experiment",
    "ScalingReport",
    "fit_power_law",
    "scaling_study",
]
