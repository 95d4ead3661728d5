import csv
import json

import pytest

from wifi_cascade.mac import ScenarioError
from wifi_cascade.mac.engine import NODE_COLUMNS, SERIES_COLUMNS
from wifi_cascade.runner import ScenarioParseError, format_scenario, parse_scenario, parse_scenario_text
from wifi_cascade.runner.cli import main, parse_grid
from wifi_cascade.runner.output import verify_manifest

FIG5 = """\
# 41-pair fixed-rate chain
topology_kind = linear
n_pairs = 41
arrival_rate = 8.125 pkts_s
packet_size = 2000
bit_rate = 1 mbps
retry_limit = 7
duration = 1000s
"""

RING = """\
topology_kind = ring
rate_policy = minstrel
arrival_rate = 31.25 pkts_s
attacker_rate = 31.25 pkts_s
attacker_burst_rate = 687.5 pkts_s
attacker_burst_start = 300 s
attacker_burst_end = 600s
sample_window = 10s
"""


def test_fig5_file(tmp_path):
    path = tmp_path / "fig5.txt"
    path.write_text(FIG5)
    spec = parse_scenario(path)
    assert spec.implied_loads()[1] == pytest.approx(0.13)
    assert spec.slot == 20e-6 and spec.difs == 50e-6


def test_ring_file():
    spec = parse_scenario_text(RING)
    assert spec.topology_kind == "ring" and spec.attacker_burst_rate == 687.5


def test_overload_rejected():
    with pytest.raises(ScenarioError, match="implied load"):
        parse_scenario_text("arrival_rate = 80 pkts_s\n")


def test_units():
    spec = parse_scenario_text("slot = 9us\ndifs = 0.034 ms\nbit_rate = 11 mbps\nduration = 2\n")
    assert spec.slot == 9e-6 and spec.difs == pytest.approx(34e-6) and spec.bit_rate == 11e6
    assert spec.duration == 2.0


@pytest.mark.parametrize("text,line,col", [
    ("n_pairs = 41\nbogus = 3\n", 2, 1),
    ("n_pairs = 41\n  retry_limit = seven\n", 2, 17),
    ("slot = 20 ns\n", 1, 8),
    ("n_pairs 41\n", 1, 1),
    ("n_pairs = 4\nn_pairs = 5\n", 2, 1),
    ("rts_cts = maybe\n", 1, 11),
])
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario_text(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_range_violation_names_key():
    with pytest.raises(ScenarioError, match="n_pairs"):
        parse_scenario_text("n_pairs = 1\n")


def test_format_round_trip():
    spec = parse_scenario_text(RING)
    assert parse_scenario_text(format_scenario(spec)) == spec


def test_parse_grid():
    assert parse_grid("0.06:0.2:0.01") == [round(0.06 + 0.01 * k, 4) for k in range(15)]


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_outputs_and_manifest_determinism(tmp_path):
    scen = tmp_path / "s.txt"
    scen.write_text("n_pairs = 5\nattacker_rate = 20 pkts_s\nduration = 30s\nseed = 3\n")
    for name in ("a", "b"):
        assert main(["simulate", "--scenario", str(scen), "--out", str(tmp_path / name)]) == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["files"] == mb["files"]
    assert {f["name"] for f in ma["files"]} == {"nodes.csv", "series.csv", "scenario.txt"}
    assert tuple(read_csv(tmp_path / "a" / "nodes.csv")[0]) == NODE_COLUMNS
    assert tuple(read_csv(tmp_path / "a" / "series.csv")[0]) == SERIES_COLUMNS
    assert verify_manifest(tmp_path / "a") == []
    echoed = parse_scenario(tmp_path / "a" / "scenario.txt")
    assert echoed == parse_scenario(scen)


def test_analyze_cli(tmp_path, capsys):
    assert main(["analyze", "--rho", "0.15", "--retry-limit", "7", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "analysis.json").read_text())[0]
    assert [round(p["omega"], 3) for p in rec["fixed_points"]] == [0.266, 0.777, 1.0]
    assert rec["regime"] == "PhaseTransition"
    main(["analyze", "--rho", "0.13", "--retry-limit", "10"])
    out = capsys.readouterr().out
    assert "Stable" in out and "Unstable" in out
    main(["analyze", "--rho", "0.10", "--retry-limit", "4"])
    assert "AlwaysUncongested" in capsys.readouterr().out


def test_analyze_boundary_warns():
    with pytest.warns(UserWarning, match="boundary"):
        main(["analyze", "--rho", "0.25", "--retry-limit", "4"])


def test_h_curve_sweep(tmp_path):
    assert main(["sweep", "h_curve", "--retry-limit", "4,7,10", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "h_curve.csv")
    assert rows[0] == ["omega", "h_R4", "h_R7", "h_R10"]
    maxima = json.loads((tmp_path / "summary.json").read_text())["maxima"]
    assert maxima["h_R4"] == pytest.approx(0.25, abs=1e-3)
    assert maxima["h_R7"] == pytest.approx(0.166, abs=1e-3)
    assert maxima["h_R10"] == pytest.approx(0.162, abs=2e-3)


def test_attacker_sweep_cli(tmp_path):
    scen = tmp_path / "s.txt"
    scen.write_text("n_pairs = 4\nduration = 20s\n")
    assert main(["sweep", "attacker_load", "--scenario", str(scen), "--grid", "0.2:0.4:0.2",
                 "--replications", "2", "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "attacker_load.csv")
    assert rows[0] == ["rho0", "u_0", "u_1", "u_2", "u_3"] and len(rows) == 3


def test_validate_cli(tmp_path):
    assert main(["validate", "--trials", "200000", "--out", str(tmp_path / "ok")]) == 0
    assert main(["validate", "--trials", "200000", "--inject-fault", "collision"]) == 1
    # an undersized budget is reported as imprecise, not failed
    assert main(["validate", "--trials", "1000", "--out", str(tmp_path / "lo")]) == 0
    statuses = {r[5] for r in read_csv(tmp_path / "lo" / "validation.csv")[1:]}
    assert "imprecise" in statuses and "fail" not in statuses


def test_reproduce_unknown_figure():
    with pytest.raises(SystemExit):
        main(["reproduce", "--figure", "fig99"])


def test_reproduce_short_run(tmp_path):
    assert main(["reproduce", "--figure", "fig5b", "--duration", "30", "--replications", "1",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "fig5b.csv")
    assert rows[0] == ["node_index", "u_rho0_0.2", "u_rho0_0.4", "u_rho0_0.6", "u_rho0_0.8"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["parameters"]["arrival_rate"]["source"] == "stated"
    assert summary["parameters"]["difs"]["source"] == "default"
