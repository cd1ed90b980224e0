"""Grid sweeps over (method, h, n, chain) cells with CSV and JSON output."""

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import RngStream
from ..diagnostics import mse_curve
from ..exceptions import NumericalError
from ..samplers import make_sampler
from .config import ExperimentConfig, build_model
from .reference import load_reference

CSV_COLUMNS = ("method", "h", "n", "chain", "epoch", "observable", "value", "mse", "stable")

_MODEL_CACHE = {}


@dataclass
class CellResult:
    method: str
    h: float
    n: int
    chain: int
    stable: bool
    steps: int
    evaluations: int
    epochs: float
    divergence_step: int = None
    error: str = None
    final_mse: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    wall_time: float = 0.0

    def summary(self):
        # timing stays out of the written summary so that repeated runs are byte-identical
        return {k: v for k, v in self.__dict__.items() if k not in ("rows", "wall_time")}


def _model_for(cfg):
    key = (json.dumps(cfg.model.__dict__, sort_keys=True), cfg.seed)
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = build_model(cfg.model, cfg.seed)
    return _MODEL_CACHE[key]


def _fmt(x):
    return format(float(x), ".12g")


def run_cell(cfg, reference, method, cell_index, h, n, chain):
    """Run one chain of one grid cell and evaluate its MSE curves.

    The random stream depends on ``(seed, cell_index, chain)`` only, so
    different methods in the same cell share their draws.
    """
    start = time.perf_counter()
    model = _model_for(cfg)
    params = dict(cfg.method_params.get(method, {}))
    params.update(h=cfg.stepsize(method, h), batch_size=n, seed=cfg.seed)
    sampler = make_sampler(method, **params)
    rng = RngStream(cfg.seed, cell_index, chain)
    theta0 = np.zeros(model.dim) if cfg.theta0 is None else np.asarray(cfg.theta0, dtype=float)
    result = CellResult(method, h, n, chain, True, 0, 0, 0.0)
    try:
        traj = sampler.sample(model, epochs=cfg.epochs, theta0=theta0, rng=rng)
    except NumericalError as exc:
        traj = exc.trajectory
        result.stable = False
        result.divergence_step = exc.step
        result.error = str(exc)
    result.steps = traj.steps_taken
    result.evaluations = traj.total_evaluations
    result.epochs = traj.total_epochs
    for obs in cfg.observables:
        curve = mse_curve(traj, reference, obs, cfg.first_checkpoint, cfg.checkpoints_per_decade)
        if not len(curve):
            result.final_mse[obs] = None
            continue
        values = curve.values.reshape(len(curve), -1).mean(axis=1)
        for epoch, value, mse in zip(curve.epochs, values, curve.mse):
            result.rows.append((method, _fmt(h), str(n), str(chain), _fmt(epoch), obs,
                                _fmt(value), _fmt(mse), "1" if result.stable else "0"))
        result.final_mse[obs] = float(curve.mse[-1])
    result.wall_time = time.perf_counter() - start
    return result


def _run_cell_args(args):
    cfg_dict, reference, method, index, h, n, chain = args
    return run_cell(ExperimentConfig.from_dict(cfg_dict), reference, method, index, h, n, chain)


def cell_tasks(cfg):
    return [(m, i, h, n, c) for m in cfg.methods for i, h, n in cfg.cells() for c in range(cfg.chains)]


def run_sweep(cfg, threads=1):
    """Run every cell; results come back in task order whatever the thread count."""
    model = _model_for(cfg)
    reference = load_reference(cfg.out, model)
    tasks = cell_tasks(cfg)
    if threads > 1:
        cfg_dict = cfg.to_dict()
        args = [(cfg_dict, reference) + t for t in tasks]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_cell_args, args))
    return [run_cell(cfg, reference, *t) for t in tasks]


def results_csv(results):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for res in results:
        writer.writerows(res.rows)
    return buf.getvalue()


def write_sweep(cfg, results):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    csv_path.write_text(results_csv(results), encoding="utf-8")
    model = _model_for(cfg)
    summary = {
        "config": cfg.to_dict(),
        "model_hash": model.model_hash(),
        "n_data": model.n_data,
        "cells": [r.summary() for r in results],
    }
    json_path = out / "summary.json"
    json_path.write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return csv_path, json_path


def read_sweep_csv(path):
    """Parse a sweep CSV into a list of dicts with numeric fields converted."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path} does not have the sweep CSV header {CSV_COLUMNS}")
        rows = []
        for row in reader:
            rows.append({
                "method": row["method"], "h": float(row["h"]), "n": int(row["n"]),
                "chain": int(row["chain"]), "epoch": float(row["epoch"]),
                "observable": row["observable"], "value": float(row["value"]),
                "mse": float(row["mse"]), "stable": row["stable"] == "1",
            })
    return rows
