"""Declarative description of one simulation run."""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

MINSTREL_RATES = (1e6, 2e6, 5.5e6, 11e6)
TOPOLOGY_KINDS = ("linear", "ring")
RATE_POLICIES = ("fixed", "minstrel")

# purposes for per-node random streams
ARRIVALS, BACKOFF, LOOKAROUND, LOADS = range(4)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    """All durations are in seconds, rates in packets/second or bits/second.

    Node 0 is the attacker. ``arrival_rate`` applies to nodes 1..n-1 unless
    ``arrival_rate_high`` is given, in which case each such node draws its
    rate uniformly from ``[arrival_rate, arrival_rate_high]``.
    ``attacker_burst_rate`` replaces ``attacker_rate`` on
    ``[attacker_burst_start, attacker_burst_end)``.
    """

    topology_kind: str = "linear"
    n_pairs: int = 41
    arrival_rate: float = 8.125
    arrival_rate_high: float | None = None
    attacker_rate: float = 0.0
    attacker_burst_rate: float | None = None
    attacker_burst_start: float = 0.0
    attacker_burst_end: float = 0.0
    packet_size: int = 2000
    bit_rate: float = 1e6
    rate_policy: str = "fixed"
    retry_limit: int = 7
    cw1: int = 31
    cw_max: int = 1023
    slot: float = 20e-6
    difs: float = 50e-6
    sifs: float = 10e-6
    rts_cts: bool = False
    stylized: bool = False
    stylized_backoff_mean: float | None = None
    duration: float = 1000.0
    warmup: float | None = None
    sample_window: float = 1.0
    seed: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.topology_kind not in TOPOLOGY_KINDS:
            raise ScenarioError(f"topology_kind must be one of {TOPOLOGY_KINDS}")
        if self.rate_policy not in RATE_POLICIES:
            raise ScenarioError(f"rate_policy must be one of {RATE_POLICIES}")
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 2:
            raise ScenarioError("n_pairs must be an integer >= 2")
        if int(self.retry_limit) != self.retry_limit or self.retry_limit < 1:
            raise ScenarioError("retry_limit must be an integer >= 1")
        if self.cw1 < 0 or self.cw_max < self.cw1:
            raise ScenarioError("need 0 <= cw1 <= cw_max")
        for name in ("slot", "duration", "sample_window", "bit_rate"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive")
        if self.packet_size <= 0:
            raise ScenarioError("packet_size must be positive")
        for name in ("difs", "sifs"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be nonnegative")
        if self.warmup is not None and not 0 <= self.warmup < self.duration:
            raise ScenarioError("warmup must lie in [0, duration)")
        for name in ("arrival_rate", "attacker_rate"):
            if getattr(self, name) < 0:
                raise ScenarioError(f"{name} must be nonnegative")
        if self.arrival_rate_high is not None and self.arrival_rate_high < self.arrival_rate:
            raise ScenarioError("arrival_rate_high must be >= arrival_rate")
        if self.attacker_burst_rate is not None:
            if self.attacker_burst_rate < 0:
                raise ScenarioError("attacker_burst_rate must be nonnegative")
            if not 0 <= self.attacker_burst_start <= self.attacker_burst_end:
                raise ScenarioError("need 0 <= attacker_burst_start <= attacker_burst_end")
        if self.stylized_backoff_mean is not None and self.stylized_backoff_mean <= 0:
            raise ScenarioError("stylized_backoff_mean must be positive")

    def replace(self, **changes) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)

    @property
    def packet_bits(self) -> int:
        return int(self.packet_size) * 8

    @property
    def packet_time(self) -> float:
        """Single-attempt airtime T at the fixed (or fastest Minstrel) rate."""
        if self.rate_policy == "minstrel":
            return self.packet_bits / max(MINSTREL_RATES)
        return self.packet_bits / self.bit_rate

    @property
    def effective_warmup(self) -> float:
        return 0.1 * self.duration if self.warmup is None else self.warmup

    @property
    def effective_difs(self) -> float:
        return 0.0 if self.stylized else self.difs

    @property
    def effective_sifs(self) -> float:
        return 0.0 if self.stylized else self.sifs

    @property
    def effective_backoff_mean(self) -> float:
        if self.stylized_backoff_mean is not None:
            return self.stylized_backoff_mean
        return 2.0 * self.packet_bits / self.bit_rate

    def node_arrival_rates(self) -> list[float]:
        """Baseline arrival rate of every transmitter (attacker first)."""
        rates = [self.attacker_rate]
        if self.arrival_rate_high is None:
            rates += [self.arrival_rate] * (self.n_pairs - 1)
        else:
            rng = stream(self.seed, 0, LOADS)
            rates += rng.uniform(self.arrival_rate, self.arrival_rate_high,
                                 self.n_pairs - 1).tolist()
        return rates

    def rate_schedule(self, node: int) -> list[tuple[float, float, float]]:
        """Piecewise-constant arrival rate ``(start, end, rate)`` of one node."""
        base = self.node_arrival_rates()[node]
        end = self.duration
        if node != 0 or self.attacker_burst_rate is None:
            return [(0.0, end, base)]
        b0 = min(self.attacker_burst_start, end)
        b1 = min(self.attacker_burst_end, end)
        pieces = [(0.0, b0, base), (b0, b1, self.attacker_burst_rate), (b1, end, base)]
        return [p for p in pieces if p[1] > p[0]]

    def implied_loads(self) -> list[float]:
        """Peak offered load ``lambda_i * T`` of every node."""
        T = self.packet_time
        peaks = []
        for node in range(self.n_pairs):
            peaks.append(max(rate for _, _, rate in self.rate_schedule(node)) * T
                         if self.duration > 0 else 0.0)
        return peaks

    def check_loads(self, strict: bool = False):
        """Warn (or raise when ``strict``) if any implied load exceeds 1."""
        for node, rho in enumerate(self.implied_loads()):
            if rho > 1.0 + 1e-9:
                msg = f"node {node} has implied load {rho:.4g} > 1"
                if strict:
                    raise ScenarioError(msg)
                warnings.warn(msg, stacklevel=2)


def stream(seed: int, node: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(node, purpose)))


def derived_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed for sweep points and replications."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def load_to_rate(rho: float, spec: ScenarioSpec) -> float:
    """Arrival rate (pkts/s) giving offered load ``rho`` at this scenario's packet time."""
    return rho / spec.packet_time


def fmt_duration(seconds: float) -> str:
    if seconds == 0:
        return "0s"
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6)):
        value = seconds / scale
        if value >= 1 and math.isclose(value, round(value, 6), rel_tol=0, abs_tol=1e-9):
            return f"{round(value, 6):g}{unit}"
    return f"{seconds * 1e6:g}us"
