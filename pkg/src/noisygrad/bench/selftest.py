"""Fast in-package property checks for the ``selftest`` command."""

import math

import numpy as np

from ..core import RngStream
from ..diagnostics import closed_form_tau, linear_gaussian_oracle
from ..lowrank import LowRankPSD
from ..models import BlrModel, GaussianSyntheticModel, MixtureModel, generate_blr_data, generate_mixture_data
from ..samplers import ABOBA, NOGIN, DampingOperator


def _check_lowrank(rng):
    worst_dense, worst_cg = 0.0, 0.0
    for _ in range(50):
        d = int(rng.integers(2, 17))
        r = int(rng.integers(1, min(d, 8) + 1))
        S = LowRankPSD(rng.standard_normal((d, r)), alpha=float(rng.uniform(0, 1)), c=float(rng.uniform(0.1, 2)))
        a, b = float(rng.uniform(0.5, 2)), float(rng.uniform(0.1, 2))
        v = rng.standard_normal(d)
        dense = np.linalg.solve(a * np.eye(d) + b * S.to_dense(), v)
        x = S.solve_shifted(a, b, v, method="woodbury")
        y = S.solve_shifted(a, b, v, method="cg")
        worst_dense = max(worst_dense, np.linalg.norm(x - dense) / np.linalg.norm(dense))
        worst_cg = max(worst_cg, np.linalg.norm(x - y) / np.linalg.norm(x))
    return worst_dense <= 1e-10 and worst_cg <= 1e-8, f"dense {worst_dense:.2e}, cg {worst_cg:.2e}"


def _check_reduction(_):
    model = GaussianSyntheticModel(0.0, 1.0, 0.0)
    a = NOGIN(h=0.1, gamma=1.0, seed=3).sample(model, 500, theta0=[1.0]).samples
    b = ABOBA(h=0.1, gamma=1.0, seed=3).sample(model, 500, theta0=[1.0]).samples
    err = float(np.max(np.abs(a - b)))
    return err <= 1e-13, f"max deviation {err:.2e}"


def _check_damping(_):
    op = DampingOperator(LowRankPSD.zeros(3), h=0.3, gamma=2.0)
    p = np.array([1.0, -2.0, 0.5])
    err = float(np.max(np.abs(op.apply(p) - math.exp(-0.6) * p)))
    return err <= 1e-14, f"deviation from exp(-gamma h) {err:.2e}"


def _check_oracle(_):
    worst = 0.0
    for h in (0.05, 0.1, 0.2):
        for c2 in (50.0, 100.0, 500.0):
            o = linear_gaussian_oracle(h, 0.0, c2)
            cf = closed_form_tau(h, c2)
            if o.oscillatory != (cf is None):
                return False, f"regime mismatch at h={h}, C^2={c2}"
            if cf is not None:
                worst = max(worst, abs(cf - o.tau) / o.tau)
    return worst <= 1e-6, f"max relative gap {worst:.2e}"


def _fd_gap(model, theta, eps=1e-5):
    fd = np.array([(model.log_density(theta + eps * e) - model.log_density(theta - eps * e)) / (2 * eps)
                   for e in np.eye(model.dim)])
    f = model.force(theta)
    return float(np.max(np.abs(fd - f)) / max(1.0, np.max(np.abs(f))))


def _check_gradients(rng):
    mix = MixtureModel(generate_mixture_data(RngStream(1), 200))
    X, y, _ = generate_blr_data(RngStream(2), 200, 5)
    blr = BlrModel(X, y)
    worst = max(max(_fd_gap(m, rng.standard_normal(m.dim) * 0.5) for _ in range(5)) for m in (mix, blr))
    return worst <= 1e-5, f"max relative finite-difference gap {worst:.2e}"


CHECKS = {
    "lowrank solve vs dense and CG": _check_lowrank,
    "zero-covariance reduction to ABOBA": _check_reduction,
    "damping equals exp(-gamma h) without noise": _check_damping,
    "oracle tau vs closed form": _check_oracle,
    "model forces vs finite differences": _check_gradients,
}


def run_selftest(seed=0, stream=print):
    """Run all checks; returns True when every one passes."""
    rng = np.random.default_rng(seed)
    ok = True
    for name, check in CHECKS.items():
        passed, detail = check(rng)
        ok &= passed
        stream(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return ok
