"""A reduced Minstrel rate controller: EWMA success statistics and a 4-stage retry chain."""
from __future__ import annotations

from dataclasses import dataclass, field

from .scenario import MINSTREL_RATES

EWMA_WEIGHT = 0.25
UPDATE_INTERVAL = 0.1
LOOKAROUND_FRACTION = 0.1
# Minstrel ignores rates that succeed less than 10% of the time
MIN_USEFUL_PROB = 0.1


def chain_counts(retry_limit: int) -> tuple[int, int, int, int]:
    """Split ``retry_limit`` attempts over the four chain stages, front-loaded.

    The last stage (lowest base rate) always gets at least one attempt.
    """
    if retry_limit < 4:
        return tuple([1] * (retry_limit - 1) + [0] * (4 - retry_limit) + [1])
    base, rem = divmod(retry_limit, 4)
    return tuple(base + (1 if i < rem else 0) for i in range(4))


@dataclass
class RateState:
    rates: tuple[float, ...] = MINSTREL_RATES
    ewma: list[float] = field(default_factory=list)
    attempts: list[int] = field(default_factory=list)
    successes: list[int] = field(default_factory=list)
    total_attempts: list[int] = field(default_factory=list)
    total_successes: list[int] = field(default_factory=list)
    chain: tuple[float, float, float, float] = ()
    next_update: float = UPDATE_INTERVAL

    def __post_init__(self):
        n = len(self.rates)
        if list(self.rates) != sorted(self.rates):
            raise ValueError("rates must be ascending")
        self.ewma = self.ewma or [1.0] * n
        self.attempts = self.attempts or [0] * n
        self.successes = self.successes or [0] * n
        self.total_attempts = self.total_attempts or [0] * n
        self.total_successes = self.total_successes or [0] * n
        if not self.chain:
            self.chain = _rank(self)

    def throughput(self, k: int) -> float:
        p = self.ewma[k]
        return p * self.rates[k] if p >= MIN_USEFUL_PROB else 0.0

    @property
    def best_throughput(self) -> float:
        return self.chain[0]

    @property
    def lowest(self) -> float:
        return self.rates[0]

    def record(self, rate: float, success: bool):
        k = self.rates.index(rate)
        self.attempts[k] += 1
        self.total_attempts[k] += 1
        if success:
            self.successes[k] += 1
            self.total_successes[k] += 1


def _rank(state: RateState) -> tuple[float, float, float, float]:
    idx = range(len(state.rates))
    # stable sort over ascending rates: ties resolve toward the slower rate
    by_tp = sorted(idx, key=lambda k: -state.throughput(k))
    best_prob = max(idx, key=lambda k: (state.ewma[k], state.throughput(k), -k))
    second = by_tp[1] if len(by_tp) > 1 else by_tp[0]
    return (state.rates[by_tp[0]], state.rates[second], state.rates[best_prob], state.rates[0])


def minstrel_update(state: RateState, elapsed: float = UPDATE_INTERVAL) -> RateState:
    """Fold one statistics window into the EWMA and recompute the retry chain.

    Rates that saw no attempts during the window keep their estimate.
    """
    if elapsed <= 0:
        raise ValueError("elapsed window must be positive")
    for k in range(len(state.rates)):
        if state.attempts[k]:
            p = state.successes[k] / state.attempts[k]
            state.ewma[k] = (1.0 - EWMA_WEIGHT) * state.ewma[k] + EWMA_WEIGHT * p
        state.attempts[k] = 0
        state.successes[k] = 0
    state.chain = _rank(state)
    state.next_update += elapsed
    return state


def catch_up(state: RateState, now: float):
    """Apply every 100 ms update that fell due before ``now``."""
    while now >= state.next_update:
        minstrel_update(state, UPDATE_INTERVAL)


def select_retry_chain(state: RateState, is_lookaround: bool,
                       random_rate: float | None = None) -> tuple[float, float, float, float]:
    best_tp, second_tp, best_prob, lowest = state.chain
    if not is_lookaround:
        return (best_tp, second_tp, best_prob, lowest)
    if random_rate is None:
        raise ValueError("a lookaround packet needs a random rate")
    if random_rate < best_tp:
        return (best_tp, random_rate, best_prob, lowest)
    return (random_rate, best_tp, best_prob, lowest)


def attempt_rate(chain, counts, attempt: int) -> float:
    """Rate used on the 1-based ``attempt`` of a packet following ``chain``."""
    left = attempt
    for rate, n in zip(chain, counts):
        if left <= n:
            return rate
        left -= n
    return chain[-1]
