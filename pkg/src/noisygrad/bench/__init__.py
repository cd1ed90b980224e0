"""Benchmark harness: configs, reference runs, sweeps, plots and the command line."""

from .config import PRESETS, ExperimentConfig, ModelSpec, ReferenceSpec, build_model, load_config, preset
from .reference import load_reference, reference_path, run_reference, write_reference
from .sweep import CSV_COLUMNS, CellResult, read_sweep_csv, results_csv, run_cell, run_sweep, write_sweep

__all__ = [
    "CSV_COLUMNS", "CellResult", "ExperimentConfig", "ModelSpec", "PRESETS", "ReferenceSpec",
    "build_model", "load_config", "load_reference", "preset", "read_sweep_csv", "reference_path",
    "results_csv", "run_cell", "run_reference", "run_sweep", "write_reference", "write_sweep",
]
