"""Cross-checks between the closed forms and the independent oracles."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import analytic, oracle

PASS, FAIL, IMPRECISE = "pass", "fail", "imprecise"

N_POINTS = 50
COLLISION_TOL = 0.01
RETRY_TOL = 0.05
FD_STEP = 1e-6
FD_REL = 1e-5
FD_ABS = 1e-8
FD_RETRY_LIMITS = (4, 7, 10, 32)
LIMIT_TOL = 1e-4


@dataclass
class CheckRecord:
    check: str
    params: str
    estimate: float
    closed_form: float
    half_width: float
    status: str

    def as_dict(self) -> dict:
        return asdict(self)


def _family_config(config: oracle.OracleConfig, n_tests: int) -> oracle.OracleConfig:
    # Bonferroni: every single interval gets 1 - alpha/n so the whole family holds at `confidence`
    alpha = (1.0 - config.confidence) / n_tests
    return oracle.OracleConfig(config.trials, config.seed, 1.0 - alpha)


def _status(est: oracle.Estimate, truth: float, tol: float) -> str:
    # too few trials cannot certify anything at `tol`, in either direction
    if est.half_width > tol or est.trials < oracle.MIN_ADEQUATE_TRIALS:
        return IMPRECISE
    return PASS if est.brackets(truth) else FAIL


def oracle_checks(config: oracle.OracleConfig, collision_offset: float = 0.0,
                  n_points: int = N_POINTS) -> list[CheckRecord]:
    """Bracket both Monte-Carlo oracles around the closed forms at random points.

    ``collision_offset`` shifts the closed-form collision probability; it only
    exists so that tests can confirm a wrong formula is caught.
    """
    family = _family_config(config, 2 * n_points)
    pts = np.random.default_rng(np.random.SeedSequence(int(config.seed), spawn_key=(99,)))
    us = pts.uniform(0.0, 1.0, n_points)
    ps = pts.uniform(0.0, 1.0, n_points)
    Rs = pts.integers(1, 17, n_points)
    out = []
    for k in range(n_points):
        u = float(us[k])
        truth = analytic.collision_probability(u) + collision_offset
        est = oracle.mc_collision_probability(u, family, key=k)
        out.append(CheckRecord("collision_probability", f"u={u:.6f}", est.value, truth,
                               est.half_width, _status(est, truth, COLLISION_TOL)))
    for k in range(n_points):
        p, R = float(ps[k]), int(Rs[k])
        truth = analytic.mean_retry_count(p, R)
        est = oracle.mc_mean_retry_count(p, R, family, key=k)
        out.append(CheckRecord("mean_retry_count", f"p={p:.6f} R={R}", est.value, truth,
                               est.half_width, _status(est, truth, RETRY_TOL)))
    return out


def backoff_checks() -> list[CheckRecord]:
    out = []
    for tx in (0.0, 0.001, 0.012, 0.016, 0.021):
        a = analytic.backoff_success_probability(tx, 20e-6, 1023)
        b = oracle.brute_force_backoff_success(tx, 20e-6, 1023)
        out.append(CheckRecord("backoff_success", f"tx={tx}", b, a, 0.0, PASS if a == b else FAIL))
    return out


def derivative_checks(retry_limits=FD_RETRY_LIMITS, n_grid: int = 1000) -> list[CheckRecord]:
    """Closed-form h' against a central difference, one record per R (worst grid point)."""
    out = []
    grid = np.arange(1, n_grid + 1) / (n_grid + 1)
    for R in retry_limits:
        closed = np.array([analytic.h_derivative(float(w), R) for w in grid])
        fd = (analytic.h_values(grid + FD_STEP, R) - analytic.h_values(grid - FD_STEP, R)) / (2 * FD_STEP)
        excess = np.abs(closed - fd) - (FD_REL * np.abs(fd) + FD_ABS)
        k = int(np.argmax(excess))
        out.append(CheckRecord("h_derivative", f"R={R} worst omega={grid[k]:.6f}",
                               float(fd[k]), float(closed[k]), FD_REL * abs(fd[k]) + FD_ABS,
                               PASS if excess[k] <= 0 else FAIL))
    return out


def limit_checks(seed: int, n_points: int = 200) -> list[CheckRecord]:
    """Empirical limit of the iteration against the bracket-based prediction.

    Loads within 1e-3 of 1/R or of h_R^max are skipped: convergence there is
    too slow to settle within the step budget.
    """
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(7,)))
    out = []
    while len(out) < n_points:
        R = int(rng.integers(1, 33))
        rho = float(rng.uniform(0.02, 0.6))
        u0 = float(rng.uniform(0.0, 1.0))
        _, top = analytic.h_max(R)
        if abs(rho - 1.0 / R) < 1e-3 or abs(rho - top) < 1e-3:
            continue
        omegas = analytic.fixed_point_omegas(rho, R)
        if min(abs(u0 - w) for w in omegas) < 1e-6:
            continue
        seq = analytic.utilization_sequence(u0, [rho], R)
        want = analytic.limit_of_sequence(u0, rho, R)
        got = seq.limit if seq.converged else seq.values[-1]
        ok = seq.converged and abs(got - want) < LIMIT_TOL
        out.append(CheckRecord("limit_agreement", f"u0={u0:.4f} rho={rho:.4f} R={R}",
                               got, want, LIMIT_TOL, PASS if ok else FAIL))
    return out


def run_all(config: oracle.OracleConfig, collision_offset: float = 0.0) -> list[CheckRecord]:
    return (oracle_checks(config, collision_offset) + backoff_checks()
            + derivative_checks() + limit_checks(config.seed))


def summarize(records: list[CheckRecord]) -> dict:
    counts = {PASS: 0, FAIL: 0, IMPRECISE: 0}
    for r in records:
        counts[r.status] += 1
    return counts

