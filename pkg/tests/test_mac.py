import numpy as np
import pytest

from wifi_cascade import analytic
from wifi_cascade.mac import ScenarioError, ScenarioSpec, build_topology, contention_window, run_simulation
from wifi_cascade.mac import minstrel
from wifi_cascade.mac.scenario import derived_seed
from wifi_cascade.mac.sweep import locate_jump, sweep_attacker_load


def test_contention_window():
    assert contention_window(1) == 31
    assert contention_window(2) == 63
    assert contention_window(6) == 1023
    assert contention_window(7) == 1023
    with pytest.raises(ValueError):
        contention_window(0)


def test_topologies():
    lin = build_topology("linear", 3)
    assert lin.interferers == ((), (0,), (1,))
    ring = build_topology("ring", 3)
    assert ring.interferers == ((2,), (0,), (1,))
    big = build_topology("linear", 41)
    assert big.n_pairs == 41 and len(big.edges) == 40
    with pytest.raises(ValueError):
        build_topology("linear", 1)
    assert lin.deferral_sets(False) == ((), (), ())
    assert lin.deferral_sets(True) == ((1,), (0, 2), (1,))


def test_chain_counts_cover_retry_limit():
    for R in range(1, 20):
        counts = minstrel.chain_counts(R)
        assert sum(counts) == R and counts[-1] >= 1


def test_minstrel_all_success_orders_by_rate():
    s = minstrel.RateState()
    for _ in range(3):
        for r in s.rates:
            s.record(r, True)
        minstrel.minstrel_update(s)
    assert s.chain == (11e6, 5.5e6, 11e6, 1e6)


def test_minstrel_collisions_drive_rate_down():
    s = minstrel.RateState()
    for _ in range(30):
        for r in s.rates:
            for _ in range(10):
                s.record(r, False)
        minstrel.minstrel_update(s)
    assert s.chain[0] == s.lowest


def test_minstrel_ewma_weight():
    s = minstrel.RateState()
    s.record(11e6, False)
    minstrel.minstrel_update(s)
    assert s.ewma[-1] == pytest.approx(0.75)
    assert s.ewma[0] == 1.0


def test_retry_chain_table():
    s = minstrel.RateState()
    best, second, prob, low = s.chain
    assert minstrel.select_retry_chain(s, False) == (best, second, prob, low)
    s.chain = (5.5e6, 2e6, 5.5e6, 1e6)
    assert minstrel.select_retry_chain(s, True, 2e6)[0] == 5.5e6
    assert minstrel.select_retry_chain(s, True, 11e6)[:2] == (11e6, 5.5e6)
    assert minstrel.attempt_rate((11e6, 5.5e6, 2e6, 1e6), (2, 2, 2, 1), 7) == 1e6


def small(**kw):
    base = dict(n_pairs=6, arrival_rate=8.125, attacker_rate=30.0, duration=120.0, seed=9)
    base.update(kw)
    return ScenarioSpec(**base)


@pytest.mark.parametrize("kw", [{}, {"rate_policy": "minstrel", "arrival_rate": 31.25},
                                {"topology_kind": "ring"}, {"rts_cts": True}, {"stylized": True}])
def test_conservation(kw):
    st = run_simulation(small(**kw))
    for n in st.nodes:
        assert n.generated == n.delivered + n.dropped + n.queued
        assert n.queued >= 0
        assert 0 <= n.utilization < 1
    assert np.allclose([n.throughput_bps for n in st.nodes],
                       [n.delivered_measured * st.spec.packet_bits / st.measured_duration for n in st.nodes])


def test_determinism():
    a = run_simulation(small(rate_policy="minstrel", arrival_rate=31.25))
    b = run_simulation(small(rate_policy="minstrel", arrival_rate=31.25))
    assert a.node_rows() == b.node_rows()
    assert np.array_equal(a.busy_series, b.busy_series)
    c = run_simulation(small(rate_policy="minstrel", arrival_rate=31.25, seed=10))
    assert a.node_rows() != c.node_rows()


def test_attacker_never_collides():
    st = run_simulation(small(attacker_rate=55.0))
    assert st.nodes[0].collided == 0
    assert st.nodes[0].utilization == pytest.approx(55.0 * 0.016, abs=0.05)


def test_saturated_utilization_stays_below_one():
    st = run_simulation(small(attacker_rate=62.5, arrival_rate=40.0))
    assert max(st.utilizations) < 1


def test_rts_cts_removes_hidden_collisions():
    st = run_simulation(small(rts_cts=True, attacker_rate=60.0))
    assert sum(n.collided for n in st.nodes) == 0


def test_overload_warns_and_strict_check_raises():
    spec = small(attacker_rate=70.0)
    with pytest.warns(UserWarning):
        spec.check_loads()
    with pytest.raises(ScenarioError):
        spec.check_loads(strict=True)


def test_heterogeneous_rates_within_bounds():
    spec = small(arrival_rate=6.875, arrival_rate_high=9.375)
    rates = spec.node_arrival_rates()[1:]
    assert all(6.875 <= r <= 9.375 for r in rates) and len(set(rates)) == len(rates)


def test_burst_schedule():
    spec = small(attacker_rate=1.0, attacker_burst_rate=50.0, attacker_burst_start=10, attacker_burst_end=20)
    assert spec.rate_schedule(0) == [(0.0, 10, 1.0), (10, 20, 50.0), (20, 120.0, 1.0)]
    assert spec.rate_schedule(1) == [(0.0, 120.0, 8.125)]


@pytest.mark.parametrize("triple", [(0.3, 0.10, 4), (0.3, 0.10, 7), (0.2, 0.09, 10)])
def test_stylized_mode_matches_iteration(triple):
    rho0, rho, R = triple
    spec = ScenarioSpec(n_pairs=21, stylized=True, arrival_rate=rho / 0.016,
                        attacker_rate=rho0 / 0.016, retry_limit=R, duration=2000.0, seed=2)
    u = np.array(run_simulation(spec).utilizations)
    seq = [rho0]
    for _ in range(20):
        seq.append(analytic.next_utilization(seq[-1], rho, R))
    assert np.max(np.abs(u - np.array(seq))) < 0.05


def test_sweep_seeds_are_derived_and_distinct():
    table = sweep_attacker_load(small(duration=20.0), [0.1, 0.5], replications=2)
    flat = [s for row in table.seeds for s in row]
    assert len(set(flat)) == 4
    assert table.seeds[0][0] == derived_seed(9, 0, 0)
    assert table.values.shape == (2, 2, 6)


def test_locate_jump():
    assert locate_jump([0.1, 0.2, 0.3], [0.2, 0.3, 0.8]) == pytest.approx(0.25)
    assert locate_jump([0.1, 0.2], [0.2, 0.3]) is None


def test_no_jump_with_short_retry_limit():
    spec = ScenarioSpec(n_pairs=41, arrival_rate=8.125, retry_limit=4, duration=300.0, seed=21)
    table = sweep_attacker_load(spec, [0.0, 1.0], replications=1)
    u40 = table.node(40)
    assert abs(u40[1] - u40[0]) < 0.1
