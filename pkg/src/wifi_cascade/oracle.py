"""Brute-force and Monte-Carlo oracles for the stylized chain model.

Nothing here imports the analytic module: each estimate is built from a
direct simulation of the modelling assumptions so the closed forms can be
checked against something that shares no arithmetic with them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

MIN_ADEQUATE_TRIALS = 100_000
CHUNK = 1_000_000


@dataclass(frozen=True)
class OracleConfig:
    """Monte-Carlo budget.

    Budgets under ``MIN_ADEQUATE_TRIALS`` are accepted so that callers can
    see a precision warning instead of a hard error.
    """

    trials: int = 1_000_000
    seed: int = 12345
    confidence: float = 0.99

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")

    @property
    def adequate(self) -> bool:
        return self.trials >= MIN_ADEQUATE_TRIALS

    @property
    def z(self) -> float:
        return NormalDist().inv_cdf(0.5 + self.confidence / 2.0)

    def rng(self, *keys: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(self.seed), spawn_key=keys))


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float
    trials: int

    def brackets(self, truth: float) -> bool:
        # exact outcomes (all-collide, never-collide) have zero spread
        return abs(self.value - truth) <= self.half_width + 1e-12

    @property
    def interval(self) -> tuple[float, float]:
        return (self.value - self.half_width, self.value + self.half_width)


def _chunks(n: int):
    while n > 0:
        k = min(n, CHUNK)
        yield k
        n -= k


def mc_collision_probability(u: float, config: OracleConfig, T: float = 0.016,
                             key: int = 0) -> Estimate:
    """Sample the conditioning experiment behind the collision probability.

    With probability ``u`` the hidden neighbour is already on the air and the
    attempt is lost. Otherwise the neighbour's next start is exponential with
    rate ``u / T`` and the attempt is lost if that start lands within ``T``.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    if T <= 0:
        raise ValueError("T must be positive")
    rng = config.rng(0, key)
    hits = 0
    for n in _chunks(config.trials):
        busy = rng.random(n) < u
        if u > 0:
            gap = rng.exponential(T / u, n)
            late = gap < T
        else:
            late = np.zeros(n, dtype=bool)
        hits += int(np.count_nonzero(busy | late))
    p = hits / config.trials
    hw = config.z * math.sqrt(p * (1.0 - p) / config.trials)
    return Estimate(p, hw, config.trials)


def mc_mean_retry_count(p: float, R: int, config: OracleConfig, key: int = 0) -> Estimate:
    """Attempts per packet when every attempt fails independently with ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if int(R) != R or R < 1:
        raise ValueError("R must be an integer >= 1")
    rng = config.rng(1, key)
    total = 0.0
    total_sq = 0.0
    for n in _chunks(config.trials):
        count = np.zeros(n, dtype=np.int64)
        pending = np.ones(n, dtype=bool)
        for _ in range(int(R)):
            count += pending
            pending &= rng.random(n) < p
        total += float(count.sum())
        total_sq += float((count.astype(float) ** 2).sum())
    N = config.trials
    mean = total / N
    var = max(total_sq / N - mean * mean, 0.0)
    hw = config.z * math.sqrt(var / N)
    return Estimate(mean, hw, N)


def brute_force_backoff_success(tx_time: float, slot: float, cw_max: int) -> float:
    """Loop over every backoff draw and add up the per-draw success chance."""
    if cw_max < 1:
        return 0.0
    terms = []
    for n in range(cw_max + 1):
        length = slot * float(n)
        if length <= tx_time:
            continue
        # start is uniform on [0, length + tx_time]; a fit needs start <= length - tx_time
        terms.append((length - tx_time) / (length + tx_time) / (cw_max + 1))
    return math.fsum(terms)
