"""Experiment harness: configuration, runners, reports and the command line."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    RUNNERS,
    gaudin_table_for,
    run_averaged_gap,
    run_experiment,
    run_gap_at_energy,
    run_gaudin_table,
    run_gustavsson,
    run_independence,
    run_kernel_convergence,
    run_single_gap,
    write_outputs,
)
from .report import COLUMNS, ExperimentReport, emit_report, load_report

__all__ = [
    "COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "RUNNERS",
    "emit_report",
    "gaudin_table_for",
    "load_config",
    "load_report",
    "run_averaged_gap",
    "run_experiment",
    "run_gap_at_energy",
    "run_gaudin_table",
    "run_gustavsson",
    "run_independence",
    "run_kernel_convergence",
    "run_single_gap",
    "write_outputs",
]
