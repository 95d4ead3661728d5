"""Parameter sweeps over independent simulation runs."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import run_simulation
from .scenario import ScenarioSpec, derived_seed, load_to_rate

DEFAULT_REPLICATIONS = 5


@dataclass
class SweepTable:
    """``values[k, rep, node]`` is the utilization of ``node`` at sweep point ``k``."""

    parameter: str
    points: list[float]
    values: np.ndarray
    seeds: list[list[int]]

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=1)

    def node(self, i: int) -> np.ndarray:
        return self.mean[:, i]


def _utilizations(spec: ScenarioSpec) -> list[float]:
    return run_simulation(spec).utilizations


def _run_all(specs: list[ScenarioSpec], jobs: int) -> list[list[float]]:
    if jobs <= 1 or len(specs) <= 1:
        return [_utilizations(s) for s in specs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_utilizations, specs))


def _sweep(spec, parameter, points, make, replications, jobs) -> SweepTable:
    specs, seeds = [], []
    for k, x in enumerate(points):
        row = [derived_seed(spec.seed, k, rep) for rep in range(replications)]
        seeds.append(row)
        specs.extend(make(x).replace(seed=s) for s in row)
    utils = _run_all(specs, jobs)
    values = np.array(utils, dtype=float).reshape(len(points), replications, spec.n_pairs)
    return SweepTable(parameter, [float(x) for x in points], values, seeds)


def sweep_attacker_load(spec: ScenarioSpec, rho0_values, replications: int = DEFAULT_REPLICATIONS,
                        jobs: int = 1) -> SweepTable:
    """One run per (attacker load, replication); seeds derive from ``spec.seed``."""
    for r in rho0_values:
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"attacker load {r} outside [0, 1]")
    return _sweep(spec, "rho0", list(rho0_values),
                  lambda r: spec.replace(attacker_rate=load_to_rate(r, spec)), replications, jobs)


def sweep_node_load(spec: ScenarioSpec, rho_values, rho0: float,
                    replications: int = DEFAULT_REPLICATIONS, jobs: int = 1) -> SweepTable:
    """Vary the common load of the non-attacker nodes at a fixed attacker load."""
    for r in rho_values:
        if not 0.0 < r < 1.0:
            raise ValueError(f"node load {r} outside (0, 1)")
    base = spec.replace(attacker_rate=load_to_rate(rho0, spec), arrival_rate_high=None)
    return _sweep(base, "rho", list(rho_values),
                  lambda r: base.replace(arrival_rate=load_to_rate(r, base)), replications, jobs)


def locate_jump(points, values, level: float = 0.5) -> float | None:
    """Midpoint between the last point below ``level`` and the first at or above it."""
    points = list(points)
    for k in range(1, len(points)):
        if values[k - 1] < level <= values[k]:
            return 0.5 * (points[k - 1] + points[k])
    return None
