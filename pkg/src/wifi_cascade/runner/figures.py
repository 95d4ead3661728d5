"""Canned scenarios and the datasets that reproduce each published figure.

Every bundle carries a summary listing which parameters were stated for the
scenario and which fall back to simulator defaults, plus the outcome of the
structural check that goes with it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .. import analytic
from ..mac import ScenarioSpec, run_simulation
from ..mac.scenario import derived_seed
from ..mac.sweep import locate_jump, sweep_attacker_load, sweep_node_load

FIGURES = ("fig5a", "fig5b", "fig13", "fig14", "ring", "rtscts", "minstrel")

FIXED_STATED = ("topology_kind", "n_pairs", "arrival_rate", "packet_size", "bit_rate",
                "retry_limit", "cw1", "cw_max", "slot", "duration")
ASSUMED = ("difs", "sifs", "warmup", "sample_window")

FIG5_BASE = ScenarioSpec(n_pairs=41, arrival_rate=8.125, packet_size=2000, bit_rate=1e6,
                         retry_limit=7, duration=1000.0)
HETERO_BASE = FIG5_BASE.replace(arrival_rate=0.11 / 0.016, arrival_rate_high=0.15 / 0.016)
MINSTREL_BASE = ScenarioSpec(n_pairs=41, rate_policy="minstrel", arrival_rate=31.25,
                             attacker_rate=0.0, attacker_burst_rate=312.5,
                             attacker_burst_start=100.0, attacker_burst_end=700.0,
                             packet_size=2000, retry_limit=7, duration=1000.0, sample_window=10.0)
# burst end is not stated for the ring; 600 s leaves 400 s to watch for recovery
RING_BASE = MINSTREL_BASE.replace(topology_kind="ring", attacker_rate=31.25,
                                  attacker_burst_rate=687.5, attacker_burst_start=300.0,
                                  attacker_burst_end=600.0)

SERIES_COLUMNS = ("time_s", "node_index", "utilization_window", "throughput_bps", "mean_rate_bps")

FIG5A_RHO0 = tuple(round(0.1 * k, 1) for k in range(1, 10))
FIG5B_RHO0 = (0.2, 0.4, 0.6, 0.8)
FIG13_RETRY = (4, 7, 10)
FIG13_RHO = tuple(round(0.01 * k, 2) for k in range(6, 21))
FIG13_REGION = {7: (0.12, 0.16), 10: (0.08, 0.14)}
FIG14_RHO0 = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DIVERGENCE = 0.3
REGION_SLACK = 0.02


@dataclass
class Bundle:
    figure: str
    tables: list = field(default_factory=list)   # (file name, header, rows)
    summary: dict = field(default_factory=dict)


def _labels(spec: ScenarioSpec, stated) -> dict:
    out = {}
    for name in stated:
        out[name] = {"value": getattr(spec, name), "source": "stated"}
    for name in ASSUMED:
        if name not in out:
            value = spec.effective_warmup if name == "warmup" else getattr(spec, name)
            out[name] = {"value": value, "source": "default"}
    return out


def _check(name: str, passed: bool, **detail) -> dict:
    return {"check": name, "passed": bool(passed), **detail}


def _float_list(a) -> list[float]:
    return [float(x) for x in a]


def fig5a(seed=1, replications=5, duration=None, jobs=1) -> Bundle:
    spec = FIG5_BASE.replace(seed=seed, duration=duration or FIG5_BASE.duration)
    table = sweep_attacker_load(spec, FIG5A_RHO0, replications, jobs)
    rows = [[x, *(float(table.mean[k, i]) for i in (1, 20, 40))] for k, x in enumerate(table.points)]
    jump = locate_jump(table.points, table.node(40))
    b = Bundle("fig5a")
    b.tables.append(("fig5a.csv", ("rho0", "u_1", "u_20", "u_40"), rows))
    b.summary = {
        "parameters": _labels(spec, FIXED_STATED) | {"replications": {"value": replications, "source": "stated"}},
        "u_40": _float_list(table.node(40)),
        "jump_at": jump,
        "checks": [_check("jump of u_40 inside rho0 in [0.35, 0.65]",
                          jump is not None and 0.35 <= jump <= 0.65, jump_at=jump)],
    }
    return b


def fig5b(seed=1, replications=5, duration=None, jobs=1) -> Bundle:
    spec = FIG5_BASE.replace(seed=seed, duration=duration or FIG5_BASE.duration)
    table = sweep_attacker_load(spec, FIG5B_RHO0, replications, jobs)
    header = ("node_index",) + tuple(f"u_rho0_{x:g}" for x in FIG5B_RHO0)
    rows = [[i, *(float(table.mean[k, i]) for k in range(len(FIG5B_RHO0)))] for i in range(spec.n_pairs)]
    u40 = dict(zip(FIG5B_RHO0, _float_list(table.node(40))))
    b = Bundle("fig5b")
    b.tables.append(("fig5b.csv", header, rows))
    checks = []
    for x, (lo, hi) in ((0.2, (0.2, 0.4)), (0.4, (0.2, 0.4)), (0.6, (0.65, 0.85)), (0.8, (0.65, 0.85))):
        checks.append(_check(f"u_40 at rho0={x} in [{lo}, {hi}]", lo <= u40[x] <= hi, value=u40[x]))
    b.summary = {"parameters": _labels(spec, FIXED_STATED), "u_40": u40, "checks": checks}
    return b


def fig13(seed=1, replications=1, duration=500.0, jobs=1) -> Bundle:
    """Far-end utilization with the attacker silent and saturated, over a node-load grid."""
    rows, per_R, checks = [], {}, []
    spec0 = FIG5_BASE.replace(seed=seed, duration=duration or FIG5_BASE.duration)
    for R in FIG13_RETRY:
        spec = spec0.replace(retry_limit=R, seed=derived_seed(seed, R))
        quiet = sweep_node_load(spec, FIG13_RHO, 0.0, replications, jobs).node(40)
        loud = sweep_node_load(spec, FIG13_RHO, 1.0, replications, jobs).node(40)
        divergent, analytic_pt = [], []
        for k, rho in enumerate(FIG13_RHO):
            gap = float(loud[k] - quiet[k])
            regime = analytic.classify_regime(rho, R).regime.value
            if gap > DIVERGENCE:
                divergent.append(rho)
            if regime == analytic.Regime.PHASE_TRANSITION.value:
                analytic_pt.append(rho)
            rows.append([R, rho, float(quiet[k]), float(loud[k]), gap, int(gap > DIVERGENCE), regime])
        per_R[R] = {"divergent": divergent, "analytic_phase_transition": analytic_pt}
        checks.append(_check(f"R={R}: simulated transition exists iff analytic one does",
                             bool(divergent) == bool(analytic_pt)))
        if R in FIG13_REGION:
            lo, hi = FIG13_REGION[R]
            inside = bool(divergent) and all(lo - REGION_SLACK <= r <= hi + REGION_SLACK for r in divergent)
            overlaps = any(lo <= r <= hi for r in divergent)
            checks.append(_check(f"R={R}: divergent loads within ({lo}, {hi}) +/- {REGION_SLACK}",
                                 inside and overlaps, divergent=divergent))
        else:
            checks.append(_check(f"R={R}: no divergent load", not divergent, divergent=divergent))
    b = Bundle("fig13")
    b.tables.append(("fig13.csv", ("retry_limit", "rho", "u_40_rho0_0", "u_40_rho0_1", "gap",
                                   "diverged", "analytic_regime"), rows))
    b.summary = {"parameters": _labels(spec0, FIXED_STATED) | {"retry_limit": {"value": list(FIG13_RETRY), "source": "stated"}},
                 "per_retry_limit": {str(k): v for k, v in per_R.items()}, "checks": checks}
    return b


def fig14(seed=1, replications=5, duration=None, jobs=1) -> Bundle:
    spec = HETERO_BASE.replace(seed=seed, duration=duration or HETERO_BASE.duration)
    table = sweep_attacker_load(spec, FIG14_RHO0, replications, jobs)
    header = ("node_index",) + tuple(f"u_rho0_{x:g}" for x in FIG14_RHO0)
    rows = [[i, *(float(table.mean[k, i]) for k in range(len(FIG14_RHO0)))] for i in range(spec.n_pairs)]
    u40 = dict(zip(FIG14_RHO0, _float_list(table.node(40))))
    jump = locate_jump(table.points, table.node(40))
    b = Bundle("fig14")
    b.tables.append(("fig14.csv", header, rows))
    b.summary = {
        "parameters": _labels(spec, FIXED_STATED + ("arrival_rate_high",)),
        "u_40": u40,
        "jump_at": jump,
        "checks": [
            _check("u_40 at rho0=0.5 within 0.35 +/- 0.1", abs(u40[0.5] - 0.35) <= 0.1, value=u40[0.5]),
            _check("u_40 at rho0=0.6 congested (>= 0.65)", u40[0.6] >= 0.65, value=u40[0.6]),
        ],
    }
    return b


def _series_run(spec: ScenarioSpec, replications: int):
    util, tput, rate = [], [], []
    for rep in range(replications):
        st = run_simulation(spec.replace(seed=derived_seed(spec.seed, rep)))
        util.append(st.utilization_series())
        tput.append(st.throughput_series())
        rate.append(st.mean_rate_series())
        collisions = [n.collided for n in st.nodes]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean_rate = np.nanmean(rate, axis=0)
    starts = st.window_starts()
    return np.mean(util, axis=0), np.mean(tput, axis=0), mean_rate, starts, collisions


def _series_rows(util, tput, rate, starts):
    rows = []
    for k, t in enumerate(starts):
        for i in range(util.shape[0]):
            r = rate[i, k]
            rows.append([float(t), i, float(util[i, k]), float(tput[i, k]),
                         float(r) if np.isfinite(r) else ""])
    return rows


def _window_mean(series, starts, lo, hi, nodes):
    mask = (starts >= lo) & (starts < hi)
    return float(series[np.ix_(nodes, np.flatnonzero(mask))].mean())


def ring(seed=1, replications=1, duration=None, jobs=1) -> Bundle:
    spec = RING_BASE.replace(seed=seed, duration=duration or RING_BASE.duration)
    util, tput, rate, starts, _ = _series_run(spec, replications)
    others = list(range(1, spec.n_pairs))
    pre = _window_mean(tput, starts, spec.effective_warmup, spec.attacker_burst_start, others)
    post = _window_mean(tput, starts, spec.attacker_burst_end, spec.duration, others)
    b = Bundle("ring")
    b.tables.append(("ring_series.csv", SERIES_COLUMNS, _series_rows(util, tput, rate, starts)))
    b.summary = {
        "parameters": _labels(spec, ("topology_kind", "n_pairs", "rate_policy", "arrival_rate",
                                     "attacker_burst_rate", "attacker_burst_start", "packet_size"))
        | {"attacker_burst_end": {"value": spec.attacker_burst_end, "source": "default"}},
        "pre_burst_throughput_bps": pre,
        "post_burst_throughput_bps": post,
        "checks": [_check("post-burst throughput below 20% of pre-burst", post < 0.2 * pre,
                          ratio=post / pre if pre else None)],
    }
    return b


def _burst_bundle(name: str, spec: ScenarioSpec, replications: int) -> Bundle:
    util, tput, rate, starts, collisions = _series_run(spec, replications)
    far = [20, 40]
    before = _window_mean(tput, starts, 0.0, spec.attacker_burst_start, far)
    during = _window_mean(tput, starts, spec.attacker_burst_start, spec.attacker_burst_end, far)
    after = _window_mean(tput, starts, spec.attacker_burst_end + 50.0, spec.duration, far)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mask = (starts >= spec.attacker_burst_start) & (starts < spec.attacker_burst_end)
        rate_during = float(np.nanmean(rate[np.ix_(far, np.flatnonzero(mask))]))
    b = Bundle(name)
    b.tables.append((f"{name}_series.csv", SERIES_COLUMNS, _series_rows(util, tput, rate, starts)))
    b.summary = {
        "parameters": _labels(spec, ("n_pairs", "rate_policy", "arrival_rate", "attacker_burst_rate",
                                     "attacker_burst_start", "attacker_burst_end", "packet_size",
                                     "retry_limit", "rts_cts")),
        "far_throughput_bps": {"before": before, "during": during, "after": after},
        "far_mean_rate_during_bps": rate_during,
        "collisions_last_seed": collisions,
    }
    return b


def minstrel(seed=1, replications=1, duration=None, jobs=1) -> Bundle:
    spec = MINSTREL_BASE.replace(seed=seed, duration=duration or MINSTREL_BASE.duration)
    b = _burst_bundle("minstrel", spec, replications)
    t = b.summary["far_throughput_bps"]
    b.summary["checks"] = [
        _check("A_20/A_40 throughput collapses during the burst (< 20% of before)",
               t["during"] < 0.2 * t["before"], ratio=t["during"] / t["before"]),
        _check("A_20/A_40 mean bit rate falls to the lowest rate during the burst",
               b.summary["far_mean_rate_during_bps"] <= 1.5e6, value=b.summary["far_mean_rate_during_bps"]),
        _check("A_20/A_40 recover after the burst (> 80% of before)",
               t["after"] > 0.8 * t["before"], ratio=t["after"] / t["before"]),
    ]
    return b


def rtscts(seed=1, replications=1, duration=None, jobs=1) -> Bundle:
    spec = MINSTREL_BASE.replace(seed=seed, rts_cts=True, duration=duration or MINSTREL_BASE.duration)
    b = _burst_bundle("rtscts", spec, replications)
    t = b.summary["far_throughput_bps"]
    b.summary["checks"] = [
        _check("A_20/A_40 throughput unchanged by the burst (within 10%)",
               abs(t["during"] - t["before"]) <= 0.1 * t["before"], ratio=t["during"] / t["before"]),
        _check("no hidden-node collisions", sum(b.summary["collisions_last_seed"]) == 0),
    ]
    return b


REPRODUCERS = {"fig5a": fig5a, "fig5b": fig5b, "fig13": fig13, "fig14": fig14,
               "ring": ring, "rtscts": rtscts, "minstrel": minstrel}


def reproduce(figure: str, seed: int = 1, replications: int | None = None,
              duration: float | None = None, jobs: int = 1) -> Bundle:
    if figure not in REPRODUCERS:
        raise KeyError(f"unknown figure id {figure!r}; known: {', '.join(FIGURES)}")
    fn = REPRODUCERS[figure]
    kwargs = {"seed": seed, "jobs": jobs}
    if replications is not None:
        kwargs["replications"] = replications
    if duration is not None:
        kwargs["duration"] = duration
    return fn(**kwargs)

