import json
import math

import numpy as np
import pytest

from maglev_smc.harness import (
    Scenario, ScenarioError, compare, dump_scenario, format_table, list_presets, load_scenario,
    preset, run, run_batch,
)
from maglev_smc.harness.cli import EXIT_ABORT, EXIT_INVALID, EXIT_OK, main
from maglev_smc.harness.io import read_report, read_trace_csv, save_record, write_trace_csv


def short(name, t_end=0.3):
    return preset(name).replace(t_end=t_end)


def test_scenario_defaults_and_validation():
    sc = Scenario("dsmc")
    assert sc.dt == 1e-3 and sc.initial == [0.015, 0.0, 0.35]
    with pytest.raises(ScenarioError, match="unknown controller"):
        Scenario("lqr")
    with pytest.raises(ScenarioError, match="do not apply"):
        Scenario("dsmc", gains={"k5": 1.0})
    with pytest.raises(ScenarioError, match="plant keys"):
        Scenario("pi_smc", plant={"mass": 1.0})
    with pytest.raises(ScenarioError, match="inconsistent"):
        Scenario("pi_smc", plant={"Q": 1.0})
    with pytest.raises(ScenarioError, match="positive"):
        Scenario("pi_smc", initial=[-0.01, 0, 0.3])
    with pytest.raises(ScenarioError, match="time-varying"):
        Scenario("dsmc", reference={"kind": "sine"})
    with pytest.raises(ScenarioError):
        Scenario("pi_smc", disturbance={"kind": "sinusoid", "amplitude": [1, 2]})
    with pytest.raises(ScenarioError, match="unknown scenario keys"):
        Scenario.from_dict({"controller": "dsmc", "speed": 3})


@pytest.mark.parametrize("suffix", [".yaml", ".json"])
def test_scenario_file_round_trip(tmp_path, suffix):
    sc = preset("fig6a-mrof-q3")
    path = tmp_path / f"s{suffix}"
    dump_scenario(sc, path)
    back = load_scenario(path)
    assert back.to_dict() == sc.to_dict()


def test_load_scenario_errors(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError, match="mapping"):
        load_scenario(bad)
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.yaml")
    named = tmp_path / "mine.yaml"
    named.write_text("controller: dsmc\n")
    assert load_scenario(named).name == "mine"


def test_presets_cover_experiments():
    names = [n for n, _ in list_presets()]
    for needed in ("fig3-regulation", "fig3-mass30", "fig5-dsmc", "fig6a-mrof-q3", "fig6b-mrof-q2",
                   "table3-pi-smc", "table3-dsmc", "table3-mrof"):
        assert needed in names
    with pytest.raises(KeyError):
        preset("nope")


def test_run_records_warnings_and_status():
    rec = run(short("fig5-dsmc"))
    assert rec.status == "ok"
    assert any("parameter constraint" in w for w in rec.warnings)
    rec = run(short("fig4b-const-disturbance"))
    assert any("k5 >= M.D + eta" in w for w in rec.warnings)


def test_aborted_run_keeps_partial_metrics():
    rec = run(preset("fig4c-sine-disturbance-FL").replace(t_end=1.0))
    assert rec.status == "aborted" and "singular" in rec.message
    assert rec.trace is not None and rec.trace.t[-1] < 1.0
    assert rec.metrics is not None


def test_batch_determinism_and_order():
    scs = [short("fig3-regulation", 0.2), short("fig5-dsmc", 1.0), short("fig6a-mrof-q3", 1.0)]
    a = run_batch(scs, 1)
    b = run_batch(scs[::-1], 3)[::-1]
    for x, y in zip(a, b):
        assert x.name == y.name
        np.testing.assert_equal(x.metrics.as_dict(), y.metrics.as_dict())
        np.testing.assert_array_equal(x.trace.x, y.trace.x)


def test_compare_table():
    recs = run_batch([short("fig5-dsmc", 1.0), short("fig6a-mrof-q3", 1.0)])
    rows = compare(recs)
    assert [r["controller"] for r in rows] == ["dsmc", "mrof_dsmc"]
    text = format_table(rows)
    assert "iae" in text.splitlines()[0] and "fig5-dsmc" in text


def test_trace_csv_round_trip(tmp_path):
    rec = run(short("fig6a-mrof-q3", 0.2))
    path = write_trace_csv(rec.trace, tmp_path / "t.csv")
    header = path.read_text().splitlines()[0]
    assert header == "t,p,v,i,u,s,s_tilde"
    cols = read_trace_csv(path)
    np.testing.assert_array_equal(cols["p"], rec.trace.p)
    assert math.isnan(cols["s_tilde"][0])  # blank before the stack fills


def test_report_round_trip(tmp_path):
    rec = run(short("fig5-dsmc", 0.5))
    csv_path, json_path = save_record(rec, tmp_path / "out")
    assert csv_path.exists()
    tree = read_report(json_path)
    assert tree["metrics"]["iae"] == pytest.approx(rec.metrics.iae)
    assert tree["scenario"]["controller"] == "dsmc"
    (tmp_path / "junk.json").write_text(json.dumps({"a": 1}))
    with pytest.raises(ValueError):
        read_report(tmp_path / "junk.json")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["list-presets"]) == EXIT_OK
    assert "fig5-dsmc" in capsys.readouterr().out

    assert main(["preset", "fig5-dsmc", "--t-end", "0.5", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "fig5-dsmc.csv").exists()

    assert main(["compare", str(tmp_path / "fig5-dsmc.json")]) == EXIT_OK
    assert "fig5-dsmc" in capsys.readouterr().out

    assert main(["preset", "fig4c-sine-disturbance-FL", "--t-end", "1.0"]) == EXIT_ABORT
    assert main(["preset", "no-such-preset"]) == EXIT_INVALID

    good = tmp_path / "good.yaml"
    good.write_text("controller: mrof_dsmc\ngains: {q: 2.0}\nt_end: 0.3\n")
    assert main(["validate", str(good)]) == EXIT_OK
    assert "fails" in capsys.readouterr().out
    assert main(["simulate", str(good)]) == EXIT_OK

    bad = tmp_path / "bad.yaml"
    bad.write_text("controller: dsmc\ngains: {k5: 3}\n")
    assert main(["validate", str(bad)]) == EXIT_INVALID
    assert main(["simulate", str(bad)]) == EXIT_INVALID
