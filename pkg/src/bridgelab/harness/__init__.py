"""Experiment registry, configuration, rate fits and report emission."""
from .config import BASE, ExperimentConfig, build_config, load_config_file
from .experiments import REGISTRY, experiment_names, make_config, run
from .report import Criterion, ExperimentReport, RateFit, Row, emit, rate_fit, to_csv, to_json

__all__ = [
    "BASE", "Criterion", "ExperimentConfig", "ExperimentReport", "REGISTRY", "RateFit", "Row",
    "build_config", "emit", "experiment_names", "load_config_file", "make_config", "rate_fit",
    "run", "to_csv", "to_json",
]
