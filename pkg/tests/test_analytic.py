import math

import mpmath
import numpy as np
import pytest

from wifi_cascade import analytic as a
from wifi_cascade.analytic import Regime, Stability

mpmath.mp.dps = 40


def mp_collision(u):
    u = mpmath.mpf(u)
    return float(1 - mpmath.e ** (-u) * (1 - u))


def test_collision_probability_examples():
    assert a.collision_probability(0) == 0
    assert a.collision_probability(1) == 1
    assert a.collision_probability(0.5) == pytest.approx(mp_collision(0.5), abs=1e-12)
    assert a.collision_probability(0.5) == pytest.approx(0.696735, abs=1e-6)


@pytest.mark.parametrize("u", [-0.1, 1.1, math.nan])
def test_collision_probability_range(u):
    with pytest.raises(ValueError):
        a.collision_probability(u)


def test_mean_retry_count_examples():
    assert a.mean_retry_count(0, 7) == 1
    assert a.mean_retry_count(1, 7) == 7
    brute = 0.0
    for r in range(1, 8):
        brute += 0.5 ** (r - 1)
    assert a.mean_retry_count(0.5, 7) == brute == 1.984375


def test_mean_retry_count_rejects_bad_input():
    for p, R in ((-0.1, 7), (1.5, 7), (0.5, 0), (0.5, 2.5)):
        with pytest.raises(ValueError):
            a.mean_retry_count(p, R)


def test_next_utilization_examples():
    assert a.next_utilization(0, 0.13, 7) == pytest.approx(0.13)
    assert a.next_utilization(1, 0.15, 7) == 1
    assert a.next_utilization(0.265, 0.15, 7) == pytest.approx(0.265, abs=1e-3)


def test_utilization_sequence_examples():
    low = a.utilization_sequence(0, [0.15] * 40, 7)
    assert low.converged and low.limit == pytest.approx(0.265, abs=1e-2)
    ones = a.utilization_sequence(1, [0.15] * 40, 7, cycle=False)
    assert all(v == 1 for v in ones.values)
    high = a.utilization_sequence(0.9, [0.13] * 60, 10)
    assert high.converged and high.limit == 1


def test_utilization_sequence_reports_nonconvergence():
    seq = a.utilization_sequence(0.5, [0.15], 7, max_steps=3)
    assert not seq.converged and seq.limit is None
    assert len(seq.values) == 4


def test_h_examples():
    assert a.h_of_omega(0, 7) == 0
    assert a.h_of_omega(1, 7) == pytest.approx(1 / 7, abs=1e-15)
    w = mpmath.mpf(3 - mpmath.sqrt(5)) / 2
    want = float(mpmath.e ** (-w) * (1 - w) * w)
    assert a.h_of_omega(a.OMEGA_BAR, math.inf) == pytest.approx(want, abs=1e-12)
    assert a.h_of_omega(a.OMEGA_BAR, math.inf) == pytest.approx(0.16118, abs=1e-4)


def test_h_derivative_examples():
    assert a.h_derivative(0.2, 10) > 0
    assert a.h_derivative(0.7, 10) < 0
    w = 0.1
    assert a.h_derivative(w, math.inf) == pytest.approx(math.exp(-w) * (1 - 3 * w + w * w), abs=1e-12)
    assert a.h_derivative(w, math.inf) == pytest.approx(0.642, abs=1e-3)
    with pytest.raises(ValueError):
        a.h_derivative(0, 7)


def test_h_max_examples():
    w, v = a.h_max(7)
    assert v == pytest.approx(0.166, abs=1e-3)
    w, v = a.h_max(4)
    assert v == pytest.approx(0.25, abs=1e-3) and w == 1
    assert a.h_max(10)[1] == pytest.approx(0.162, abs=2e-3)


def test_h_max_dominates_endpoints():
    for R in (1, 2, 5, 7, 10, 40, math.inf):
        _, v = a.h_max(R)
        assert v >= a.h_of_omega(1, R) and v >= a.h_of_omega(a.OMEGA_BAR, R)


def test_fixed_points_examples():
    fps = a.find_fixed_points(0.15, 7)
    assert fps.count == 3
    for got, want in zip(fps.omegas, (0.265, 0.777, 1)):
        assert got == pytest.approx(want, abs=1e-3)
    fps = a.find_fixed_points(0.13, 10)
    for got, want in zip(fps.omegas, (0.2, 0.7, 1)):
        assert got == pytest.approx(want, abs=5e-3)


def test_fixed_points_single_interior():
    fps = a.find_fixed_points(0.10, 4)
    assert fps.count == 1 and fps[0].omega < 1
    # independent root via bisection on f(w) - w
    lo, hi = 0.0, 0.9
    for _ in range(200):
        mid = (lo + hi) / 2
        if a.next_utilization(mid, 0.10, 4) - mid > 0:
            lo = mid
        else:
            hi = mid
    assert fps[0].omega == pytest.approx(lo, abs=1e-8)


def test_fixed_point_includes_one_at_reciprocal():
    fps = a.find_fixed_points(0.25, 4)
    assert fps.omegas[-1] == 1


def test_stability_examples():
    fps = a.find_fixed_points(0.13, 10)
    labels = [a.classify_stability(w, 0.13, 10) for w in fps.omegas]
    assert labels == [Stability.STABLE, Stability.UNSTABLE, Stability.STABLE]
    assert a.classify_stability(1, 0.15, 7) is Stability.STABLE
    with pytest.raises(ValueError):
        a.classify_stability(0.5, 0.13, 10)


def test_marginal_label_at_tangency():
    w, v = a.h_max(7)
    assert a._label(w, v, 7, 1e-8) is Stability.MARGINAL


def test_regime_examples():
    assert a.classify_regime(0.10, 4).regime is Regime.ALWAYS_UNCONGESTED
    rep = a.classify_regime(0.15, 7)
    assert rep.regime is Regime.PHASE_TRANSITION
    assert rep.transition_point == pytest.approx(0.777, abs=1e-3)
    assert a.classify_regime(0.30, 4).regime is Regime.ALWAYS_CONGESTED


def test_regime_boundaries_are_flagged():
    assert a.classify_regime(0.25, 4).regime is Regime.BOUNDARY
    _, top = a.h_max(7)
    rep = a.classify_regime(top, 7)
    assert rep.regime is Regime.BOUNDARY and rep.boundary


def test_regime_report_invariant():
    fps = a.find_fixed_points(0.15, 7)
    with pytest.raises(ValueError):
        a.RegimeReport(Regime.PHASE_TRANSITION, fps, transition_point=0.3)
    with pytest.raises(ValueError):
        a.RegimeReport(Regime.ALWAYS_CONGESTED, fps, transition_point=0.777)


def test_limit_examples():
    assert a.limit_of_sequence(0.5, 0.15, 7) == pytest.approx(0.265, abs=1e-3)
    assert a.limit_of_sequence(0.9, 0.15, 7) == 1
    w2 = a.find_fixed_points(0.15, 7)[1].omega
    assert a.limit_of_sequence(w2, 0.15, 7) == w2


def test_phase_bounds_examples():
    b = a.phase_transition_bounds(7)
    assert b.lower == 1 / 7
    assert b.upper == pytest.approx(0.166, abs=1e-3)
    b = a.phase_transition_bounds(10)
    assert b.lower == 0.1 and b.upper == pytest.approx(0.162, abs=2e-3)
    assert b.guaranteed_upper <= b.upper
    assert b.omega_bar == (3 - math.sqrt(5)) / 2


def test_phase_bounds_r6_by_grid_scan():
    # a 10^5-point scan of h_6, independent of the golden refinement
    grid = np.linspace(0, 1, 100_001)
    scan_max = float(a.h_values(grid, 6).max())
    b = a.phase_transition_bounds(6)
    assert b.upper == pytest.approx(scan_max, abs=1e-8)
    # h_6(omega_bar) = 0.16737 is just above 1/6, so the guaranteed interval is a sliver
    assert b.guaranteed_upper == pytest.approx(0.167373, abs=1e-6)
    assert b.guaranteed_interval is not None
    assert b.guaranteed_interval[1] - b.guaranteed_interval[0] < 1e-3


def test_backoff_success_examples():
    assert a.backoff_success_probability(0.012, 20e-6, 1023) == pytest.approx(0.059, abs=1e-3)
    assert a.backoff_success_probability(0.021, 20e-6, 1023) == 0
    total = 0.0
    for n in range(1024):
        d = 20e-6 * n
        if d > 0.001:
            total += (d - 0.001) / (d + 0.001) / 1024
    assert a.backoff_success_probability(0.001, 20e-6, 1023) == pytest.approx(total, rel=1e-12)


def test_model_record_is_json_ready():
    import json
    rec = a.model_record(0.15, 7)
    assert json.loads(json.dumps(rec))["regime"] == "PhaseTransition"
    assert [p["stability"] for p in rec["fixed_points"]] == ["Stable", "Unstable", "Stable"]


def test_model_params_invariants():
    a.ModelParams(7, 0.13, 0.5)
    a.ModelParams(7, (0.11, 0.15))
    for bad in ((0, 0.13), (7, 1.0), (7, 0.0)):
        with pytest.raises(ValueError):
            a.ModelParams(*bad)
    with pytest.raises(ValueError):
        a.ModelParams(7, 0.13, 1.5)
