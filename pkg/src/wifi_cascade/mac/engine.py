"""Event-driven CSMA/CA simulation of hidden-node pair chains.

Each transmitter holds an unbounded FIFO fed by Poisson arrivals. A head-of-line
packet waits DIFS plus a uniform backoff of ``0..CW_r`` slots, then occupies the
air for ``packet_bits / rate``. A reception fails when any interfering
transmitter is on the air at some instant of the frame. A failed attempt raises
the retry count; past the retry limit the packet is dropped. ACK airtime is not
modelled: the transmitter idles SIFS after every attempt.

Simultaneous events run in ``(time, node, kind)`` order.
"""
from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import minstrel
from .scenario import ARRIVALS, BACKOFF, LOOKAROUND, ScenarioSpec, stream
from .topology import Topology, build_topology

END, ACCESS, START = 0, 1, 2
IDLE, WAIT, TX = 0, 1, 2

NODE_COLUMNS = ("node_index", "generated", "delivered", "collided", "dropped",
                "busy_seconds", "utilization", "throughput_bps")
SERIES_COLUMNS = ("time_s", "node_index", "utilization_window")


def contention_window(r: int, cw1: int = 31, cw_max: int = 1023) -> int:
    """Backoff window (slots) at the ``r``-th attempt of a packet."""
    if r < 1:
        raise ValueError("attempt index starts at 1")
    if r > 64:
        return cw_max
    return min((2 ** (r - 1)) * (cw1 + 1) - 1, cw_max)


@dataclass
class NodeStats:
    node_index: int
    generated: int
    delivered: int
    collided: int
    dropped: int
    queued: int
    attempts: int
    busy_seconds: float
    utilization: float
    delivered_measured: int
    throughput_bps: float

    def row(self) -> list:
        return [getattr(self, c) for c in NODE_COLUMNS]


@dataclass
class TrafficStats:
    spec: ScenarioSpec
    nodes: list[NodeStats]
    measured_duration: float
    window: float
    busy_series: np.ndarray        # (n_nodes, n_windows) seconds on air
    delivered_series: np.ndarray   # (n_nodes, n_windows) packets delivered
    attempt_series: np.ndarray     # (n_nodes, n_windows) attempts started
    rate_sum_series: np.ndarray    # (n_nodes, n_windows) sum of attempt bit rates
    extras: dict = field(default_factory=dict)

    @property
    def utilizations(self) -> list[float]:
        return [s.utilization for s in self.nodes]

    def window_starts(self) -> np.ndarray:
        return np.arange(self.busy_series.shape[1]) * self.window

    def window_lengths(self) -> np.ndarray:
        starts = self.window_starts()
        return np.minimum(starts + self.window, self.spec.duration) - starts

    def utilization_series(self) -> np.ndarray:
        return self.busy_series / self.window_lengths()

    def throughput_series(self) -> np.ndarray:
        return self.delivered_series * self.spec.packet_bits / self.window_lengths()

    def mean_rate_series(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.attempt_series > 0,
                            self.rate_sum_series / np.maximum(self.attempt_series, 1), np.nan)

    def node_rows(self) -> list[list]:
        return [s.row() for s in self.nodes]

    def series_rows(self) -> list[list]:
        util = self.utilization_series()
        starts = self.window_starts()
        return [[float(starts[k]), i, float(util[i, k])]
                for k in range(util.shape[1]) for i in range(util.shape[0])]


class _Draws:
    """Buffered uniforms from one generator; scalar numpy draws are slow."""

    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: list[float] = []
        self.pos = 0

    def next(self) -> float:
        if self.pos >= len(self.buf):
            self.buf = self.rng.random(4096).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


def poisson_arrivals(rng: np.random.Generator, schedule) -> list[float]:
    """Arrival instants of a Poisson process with piecewise-constant rate."""
    out: list[float] = []
    for t0, t1, rate in schedule:
        if rate <= 0 or t1 <= t0:
            continue
        expected = rate * (t1 - t0)
        chunk = int(expected + 6 * math.sqrt(expected) + 16)
        t = t0
        while True:
            times = t + np.cumsum(rng.exponential(1.0 / rate, chunk))
            if times[-1] >= t1:
                out.extend(times[times < t1].tolist())
                break
            out.extend(times.tolist())
            t = float(times[-1])
    return out


def run_simulation(spec: ScenarioSpec, topology: Topology | None = None) -> TrafficStats:
    spec.validate()
    spec.check_loads()
    topo = topology or build_topology(spec.topology_kind, spec.n_pairs)
    n = topo.n_pairs
    if n != spec.n_pairs:
        raise ValueError("topology size does not match the scenario")

    D = spec.duration
    w0 = spec.effective_warmup
    W = spec.sample_window
    n_windows = max(1, math.ceil(D / W - 1e-12))
    R = int(spec.retry_limit)
    slot = spec.slot
    difs = spec.effective_difs
    sifs = spec.effective_sifs
    stylized = spec.stylized
    backoff_mean = spec.effective_backoff_mean
    bits = spec.packet_bits
    fixed_T = bits / spec.bit_rate
    use_minstrel = spec.rate_policy == "minstrel"
    cw = [0] + [contention_window(r, spec.cw1, spec.cw_max) for r in range(1, R + 1)]

    interferers = topo.interferers
    victims = topo.victims()
    defers = topo.deferral_sets(spec.rts_cts)
    listeners: list[list[int]] = [[] for _ in range(n)]
    for j, ks in enumerate(defers):
        for k in ks:
            listeners[k].append(j)
    has_defer = [bool(d) for d in defers]

    arrivals = [poisson_arrivals(stream(spec.seed, i, ARRIVALS), spec.rate_schedule(i))
                for i in range(n)]
    narr = [len(a) for a in arrivals]
    draws = [_Draws(stream(spec.seed, i, BACKOFF)) for i in range(n)]
    look = [_Draws(stream(spec.seed, i, LOOKAROUND)) for i in range(n)]

    rate_states = [minstrel.RateState() for _ in range(n)] if use_minstrel else None
    counts = minstrel.chain_counts(R)
    chains: list[tuple] = [()] * n

    head = [0] * n
    retry = [1] * n
    phase = [IDLE] * n
    on_air = [False] * n
    tx_start = [0.0] * n
    tx_end = [0.0] * n
    tx_rate = [spec.bit_rate] * n
    corrupt = [False] * n
    gen = [0] * n
    backoff_left = [0.0] * n
    countdown_from = [0.0] * n
    busy_neighbours = [0] * n

    delivered = [0] * n
    delivered_measured = [0] * n
    dropped = [0] * n
    collided = [0] * n
    attempts = [0] * n
    busy = [0.0] * n
    busy_ts = [[0.0] * n_windows for _ in range(n)]
    deliv_ts = [[0] * n_windows for _ in range(n)]
    att_ts = [[0] * n_windows for _ in range(n)]
    rate_ts = [[0.0] * n_windows for _ in range(n)]

    heap: list[tuple] = []
    heappush = heapq.heappush
    pop = heapq.heappop

    def push(item):
        heappush(heap, item)

    def draw_backoff(i: int) -> float:
        u = draws[i].next()
        if stylized:
            return -backoff_mean * math.log1p(-u)
        return int(u * (cw[retry[i]] + 1)) * slot

    def begin_access(i: int, t: float):
        phase[i] = WAIT
        backoff_left[i] = draw_backoff(i)
        if busy_neighbours[i] == 0:
            countdown_from[i] = t + difs
            gen[i] += 1
            push((countdown_from[i] + backoff_left[i], i, START, gen[i]))

    def account(i: int, s: float, e: float):
        lo = s if s > w0 else w0
        if e > lo:
            busy[i] += e - lo
        k = int(s / W)
        row = busy_ts[i]
        while k < n_windows and s < e:
            edge = (k + 1) * W
            stop = e if e < edge else edge
            row[k] += stop - s
            s = stop
            k += 1

    for i in range(n):
        if narr[i]:
            if has_defer[i]:
                push((arrivals[i][0], i, ACCESS, 0))
            else:
                begin_access(i, arrivals[i][0])

    while heap:
        t, i, kind, g = pop(heap)
        if t > D:
            break
        if kind == START:
            if g != gen[i] or phase[i] != WAIT:
                continue
            phase[i] = TX
            if use_minstrel:
                state = rate_states[i]
                if retry[i] == 1:
                    minstrel.catch_up(state, t)
                    if look[i].next() < minstrel.LOOKAROUND_FRACTION:
                        others = [r for r in state.rates if r != state.best_throughput]
                        pick = others[min(int(look[i].next() * len(others)), len(others) - 1)]
                        chains[i] = minstrel.select_retry_chain(state, True, pick)
                    else:
                        chains[i] = minstrel.select_retry_chain(state, False)
                rate = minstrel.attempt_rate(chains[i], counts, retry[i])
                T = bits / rate
            else:
                rate = spec.bit_rate
                T = fixed_T
            on_air[i] = True
            tx_start[i] = t
            tx_end[i] = t + T
            tx_rate[i] = rate
            hit = False
            for k in interferers[i]:
                if on_air[k] and tx_end[k] > t:
                    hit = True
            corrupt[i] = hit
            for j in victims[i]:
                if on_air[j] and tx_end[j] > t:
                    corrupt[j] = True
            attempts[i] += 1
            kw = int(t / W)
            if kw < n_windows:
                att_ts[i][kw] += 1
                rate_ts[i][kw] += rate
            for j in listeners[i]:
                busy_neighbours[j] += 1
                if busy_neighbours[j] == 1 and phase[j] == WAIT:
                    gen[j] += 1
                    if t > countdown_from[j]:
                        elapsed = t - countdown_from[j]
                        if not stylized:
                            elapsed = math.floor(elapsed / slot + 1e-9) * slot
                        backoff_left[j] = max(backoff_left[j] - elapsed, 0.0)
            heappush(heap, (t + T, i, END, 0))
        elif kind == END:
            on_air[i] = False
            account(i, tx_start[i], t)
            ok = not corrupt[i]
            if use_minstrel:
                rate_states[i].record(tx_rate[i], ok)
            if ok:
                delivered[i] += 1
                if t >= w0:
                    delivered_measured[i] += 1
                kw = int(t / W)
                if kw < n_windows:
                    deliv_ts[i][kw] += 1
                head[i] += 1
                retry[i] = 1
            else:
                collided[i] += 1
                if retry[i] >= R:
                    dropped[i] += 1
                    head[i] += 1
                    retry[i] = 1
                else:
                    retry[i] += 1
            for j in listeners[i]:
                busy_neighbours[j] -= 1
                if busy_neighbours[j] == 0 and phase[j] == WAIT:
                    countdown_from[j] = t + difs
                    gen[j] += 1
                    push((countdown_from[j] + backoff_left[j], j, START, gen[j]))
            phase[i] = IDLE
            if head[i] < narr[i]:
                ready = t + sifs
                a = arrivals[i][head[i]]
                if a > ready:
                    ready = a
                if has_defer[i]:
                    push((ready, i, ACCESS, 0))
                else:
                    begin_access(i, ready)
        else:
            if phase[i] == IDLE and head[i] < narr[i] and arrivals[i][head[i]] <= t:
                begin_access(i, t)

    for i in range(n):
        if on_air[i] and tx_start[i] < D:
            account(i, tx_start[i], min(tx_end[i], D))

    measured = D - w0
    nodes = []
    for i in range(n):
        generated = bisect.bisect_right(arrivals[i], D)
        nodes.append(NodeStats(
            node_index=i,
            generated=generated,
            delivered=delivered[i],
            collided=collided[i],
            dropped=dropped[i],
            queued=generated - head[i],
            attempts=attempts[i],
            busy_seconds=busy[i],
            utilization=busy[i] / measured,
            delivered_measured=delivered_measured[i],
            throughput_bps=delivered_measured[i] * bits / measured,
        ))
    extras = {}
    if use_minstrel:
        extras["rate_states"] = rate_states
    return TrafficStats(
        spec=spec,
        nodes=nodes,
        measured_duration=measured,
        window=W,
        busy_series=np.array(busy_ts),
        delivered_series=np.array(deliv_ts),
        attempt_series=np.array(att_ts),
        rate_sum_series=np.array(rate_ts),
        extras=extras,
    )
