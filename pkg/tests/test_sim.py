import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from irswarm.cli import main
from irswarm.sim.experiments import replicate
from irswarm.sim.report import ExperimentReport
from irswarm.sim.runner import build_engine, run
from irswarm.sim.scenario import load_scenario, parse_scenario
from irswarm.sim.seeds import derive, derive_many
from irswarm.sim.trace import Trace, fmt_ticks

ROOT = Path(__file__).resolve().parents[1]
HANDSHAKE = ROOT / "scenarios" / "handshake.json"


def base(**kw):
    d = {"version": 1, "seed": 1, "duration_ms": 500.0,
         "robots": [{"id": 0, "x": 0, "y": 0, "send": {"data": 9}}, {"id": 1, "x": 100, "y": 0}]}
    d.update(kw)
    return d


def traces(seed):
    cfg = load_scenario(HANDSHAKE).model_copy(update={"seed": seed})
    t = run(cfg).trace
    return t.pulses_csv() + t.events_csv()


def test_scenario_parses():
    cfg = load_scenario(HANDSHAKE)
    assert cfg.version == 1 and len(cfg.robots) == 2


@pytest.mark.parametrize("patch,field", [
    ({"bogus": 1}, "bogus"),
    ({"version": 2}, "version"),
    ({"duration_ms": -1}, "duration_ms"),
    ({"robot_count": 3}, "robot_count"),
    ({"arena": [0, 0, 0, 10]}, "arena"),
])
def test_scenario_errors_name_the_field(patch, field):
    with pytest.raises(ValidationError) as info:
        parse_scenario(json.dumps(base(**patch)))
    assert field in str(info.value)


def test_robot_field_errors():
    bad = base()
    bad["robots"][0]["resend_ms"] = [5, 100]
    with pytest.raises(ValidationError, match="resend_ms"):
        parse_scenario(json.dumps(bad))
    dup = base()
    dup["robots"][1]["id"] = 0
    with pytest.raises(ValidationError, match="unique"):
        parse_scenario(json.dumps(dup))
    out = base(arena=[-50, -50, 50, 50])
    with pytest.raises(ValidationError, match="outside"):
        parse_scenario(json.dumps(out))


def test_zero_robots_runs_empty():
    res = run(parse_scenario(json.dumps(base(robots=[]))))
    assert res.trace.events == [] and res.report.measurements == []


def test_handshake_trace_order():
    res = run(load_scenario(HANDSHAKE))
    events = [(r[1], r[2]) for r in res.trace.sorted_events()]
    order = [e for e in events if e in ((0, "RequestSent"), (1, "ReadySent"), (0, "DataSent"),
                                        (1, "AckSent"), (1, "Delivered"))]
    i = order.index((1, "ReadySent"))
    assert order[i - 1] == (0, "RequestSent")
    assert order[i:i + 4] == [(1, "ReadySent"), (0, "DataSent"), (1, "Delivered"), (1, "AckSent")]
    assert res.report.value is not None
    states = {m["robot_id"]: m["state"] for m in res.report.measurements}
    assert states[0] == "Done"


def test_decide_hook_runs_every_cycle():
    calls = []
    eng = build_engine(load_scenario(HANDSHAKE), Trace("none"))
    eng.decide = lambda e, n: calls.append((e.now, n.rid))
    eng.start()
    eng.run(2000)
    assert {rid for _, rid in calls} == {0, 1}
    assert calls == sorted(calls, key=lambda c: c[0])


def test_traces_byte_identical():
    assert traces(11) == traces(11)
    assert traces(11) != traces(12)


def test_fan_out_is_deterministic():
    seeds = derive_many(5, 4)
    serial = replicate(traces, seeds, workers=1)
    assert replicate(traces, seeds, workers=4, pool="thread") == serial


def test_seed_derivation():
    assert derive(1, 0) == derive(1, 0)
    assert len(set(derive_many(1, 100))) == 100


def test_fmt_ticks():
    assert fmt_ticks(0) == "0.00"
    assert fmt_ticks(1) == "0.05"
    assert fmt_ticks(-21) == "-1.05"
    with pytest.raises(ValueError):
        Trace("verbose")


def test_report_roundtrip():
    rep = ExperimentReport("x", "median", (1.0, 3.0), "", {"k": 1},
                           [{"seed": 1, "value": 2.0}, {"seed": 2, "value": None}, {"seed": 3, "value": 1.5}])
    assert rep.value == 2.0 and rep.passed and rep.failures == 1
    d = json.loads(rep.to_json())
    assert d["schema"] == 1 and d["measurements"][1]["value"] is None
    assert rep.to_csv().splitlines()[0] == "seed,value"
    assert rep.line().startswith("PASS x")
    mean = ExperimentReport("m", "mean", (0, 10), measurements=[{"seed": 1, "value": 1.0}, {"seed": 2, "value": None}])
    assert not mean.passed
    with pytest.raises(ValueError):
        ExperimentReport("bad", "mode")


def test_cli_run_writes_traces(tmp_path, capsys):
    assert main(["run", str(HANDSHAKE), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "pulses.csv").read_text().startswith("time_ms,robot_id,channel,edge")
    assert (tmp_path / "events.csv").exists() and (tmp_path / "run.json").exists()


def test_cli_experiment_exit_codes(capsys):
    assert main(["experiment", "deadzone", "--board", "v1"]) == 0
    assert main(["experiment", "deadzone", "--board", "v1", "--probe-distance", "300"]) == 2
    assert main(["run", "/nonexistent.json"]) == 2


def test_cli_scan_gallery(capsys):
    assert main(["scan-gallery", "flat32"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# flat32\nsample_index,bearing_deg,adc,distance_mm_est")
    assert len(out.strip().splitlines()) == 62
