"""Reference moments from long Metropolis-adjusted runs, cached on disk by model hash."""

import json
import logging
import math
from pathlib import Path

import numpy as np

from ..core import RngStream
from ..diagnostics import ReferenceMissingError
from ..samplers import MALA

log = logging.getLogger(__name__)

CACHE_VERSION = 1
REFERENCE_STREAM = 2**31 - 2
ACCEPTANCE_RANGE = (0.2, 0.9)


def reference_path(out_dir, model):
    return Path(out_dir) / "reference" / f"{model.model_hash()}.json"


def run_reference(model, spec, seed, theta0=None):
    """Run ``spec.chains`` lockstep MALA chains and summarize the pooled draws.

    Chains start from ``theta0`` (zeros by default) plus a Gaussian jitter
    of scale ``spec.jitter``.
    """
    rng = RngStream(seed, REFERENCE_STREAM)
    base = np.zeros(model.dim) if theta0 is None else np.asarray(theta0, dtype=float)
    init = base + spec.jitter * rng.normal((spec.chains, model.dim))
    per_chain = math.ceil(spec.samples / spec.chains)
    n_steps = spec.burn_in + per_chain * spec.thin
    sampler = MALA(h=spec.h, seed=seed, stride=1)
    traj = sampler.sample(model, n_steps, theta0=init, rng=rng)
    draws = traj.samples[spec.burn_in:][:: spec.thin]  # (T, K, D)
    pooled = draws.reshape(-1, model.dim)
    chain_var = draws.var(axis=0)
    accepted = np.asarray(traj.diagnostics["accepted"][spec.burn_in:], dtype=float)
    rate = float(accepted.mean())
    warnings = []
    if not ACCEPTANCE_RANGE[0] <= rate <= ACCEPTANCE_RANGE[1]:
        msg = f"MALA acceptance rate {rate:.3f} outside [{ACCEPTANCE_RANGE[0]}, {ACCEPTANCE_RANGE[1]}]"
        log.warning(msg)
        warnings.append(msg)
    return {
        "version": CACHE_VERSION,
        "model_hash": model.model_hash(),
        "model": model.spec(),
        "method": "mala",
        "h": spec.h,
        "seed": int(seed),
        "chains": spec.chains,
        "burn_in": spec.burn_in,
        "thin": spec.thin,
        "samples": int(pooled.shape[0]),
        "mean": pooled.mean(axis=0).tolist(),
        "variance": pooled.var(axis=0).tolist(),
        "variance_stderr": (chain_var.std(axis=0, ddof=1) / math.sqrt(spec.chains)).tolist()
        if spec.chains > 1 else [math.nan] * model.dim,
        "acceptance_rate": rate,
        "warnings": warnings,
    }


def write_reference(result, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def load_reference(out_dir, model):
    """Return the cached reference for ``model`` or raise ReferenceMissingError."""
    path = reference_path(out_dir, model)
    if not path.exists():
        raise ReferenceMissingError(
            f"no reference cache at {path}; run the `reference` command with this config first"
        )
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("model_hash") != model.model_hash():
        raise ReferenceMissingError(f"reference cache {path} belongs to a different model")
    return data
