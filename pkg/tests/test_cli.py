import json

import pytest
import yaml
from click.testing import CliRunner

from pwm_ensemble.cli import EXIT_INVALID, EXIT_NOT_APPLICABLE, OUTPUT_DIR_ENV, main
from pwm_ensemble.config import parse_config, with_override
from pwm_ensemble.environment import ConfigurationError
from pwm_ensemble.experiment import RECORDS_FORMAT, run_sweep, summarize

BASE = {
    "stream": {"kind": "s3", "mu": 1.0},
    "k": 3,
    "n": 200,
    "aggregators": ["pwm", "am", "alone"],
    "classifier": {"kind": "threshold"},
    "seeds": [1, 2],
}


def write_cfg(path, **over):
    cfg = {**BASE, **over}
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_defaults_are_filled():
    cfg = parse_config({"stream": {"kind": "s2"}, "k": 8, "n": 100})
    assert cfg.stream.event_prob == 0.05 and cfg.stream.label_rule == "any"
    assert cfg.environment.max_delay == 0 and cfg.environment.label_prob == 1.0
    assert cfg.seed_list() == [0]


def test_unknown_key_reports_path():
    with pytest.raises(ConfigurationError, match=r"environment\.delay"):
        parse_config({**BASE, "environment": {"delay": 3}})


def test_empty_seed_list():
    with pytest.raises(ConfigurationError, match="seed list is empty"):
        parse_config({**BASE, "seeds": []})


def test_abstention_needs_extended_rule():
    with pytest.raises(ConfigurationError, match="use epwm"):
        parse_config({**BASE, "environment": {"arrival_prob": 0.9}})


def test_bad_sweep_variable():
    with pytest.raises(ConfigurationError, match="sweep.variable"):
        parse_config({**BASE, "sweep": {"variable": "stream.nope", "values": [1]}})


def test_override():
    cfg = parse_config(BASE)
    assert with_override(cfg, "stream.mu", 0.5).stream.mu == 0.5
    assert with_override(cfg, "aggregated", 2).aggregated == 2


def test_sweep_records_and_summary():
    cfg = parse_config({**BASE, "sweep": {"variable": "stream.mu", "values": [0.5, 1.5]}})
    res = run_sweep(cfg)
    assert res.ok
    assert len(res.records) == 2 * 2 * 3
    rec = res.records[0]
    assert set(rec["bounds"]) == {"b1", "b2", "b", "delayed", "async", "missing"}
    pwm_hi = [s for s in res.summary if s["aggregator"] == "pwm" and s["point"] == 1.5][0]
    assert pwm_hi["seeds"] == 2 and pwm_hi["p_system_se"] >= 0


def test_summary_mean_and_se():
    recs = [{"point": None, "aggregator": "a", "p_system": v, "p_opt": 0, "p_star": 0, "alpha": 0,
             "bounds": {}} for v in (0.1, 0.3)]
    s = summarize(recs)[0]
    assert s["p_system_mean"] == pytest.approx(0.2)
    assert s["p_system_se"] == pytest.approx(0.1)


def test_run_writes_versioned_outputs(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path / "c.yaml", sweep={"variable": "stream.mu", "values": [0.5, 1.0]})
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
    res = CliRunner().invoke(main, ["run", str(cfg)])
    assert res.exit_code == 0, res.output
    out = tmp_path / "env_out"
    lines = (out / "run.records.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["format"] == RECORDS_FORMAT and header["version"] == 1 and "p_opt" in header["columns"]
    assert len(lines) == 1 + 2 * 2 * 3
    table = (out / "run.stream.mu.csv").read_text().splitlines()
    assert table[0].startswith("# format=") and table[1].startswith("stream.mu,")
    # records are appended on a second run
    CliRunner().invoke(main, ["run", str(cfg)])
    assert len((out / "run.records.jsonl").read_text().splitlines()) == 1 + 2 * 12


def test_run_invalid_config_exit_code(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", seeds=[])
    res = CliRunner().invoke(main, ["run", str(cfg), "-o", str(tmp_path)])
    assert res.exit_code == EXIT_INVALID
    assert "seeds" in res.output


def test_run_enumerates_failed_seeds(tmp_path):
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("a,b,c,y\n" + "0.1,0.2,0.3,1\n" * 10)
    cfg = write_cfg(tmp_path / "c.yaml", stream={"kind": "csv", "path": str(csv_path),
                                                 "learners": [["a"], ["b"], ["c"]], "label": "y"})
    res = CliRunner().invoke(main, ["run", str(cfg), "-o", str(tmp_path / "o")])
    assert res.exit_code == 1
    assert "failed seed 1" in res.output and "failed seed 2" in res.output


def test_bounds_examples():
    r = CliRunner().invoke(main, ["bounds", "--k", "8", "--n", "20000", "--p-opt", "0"])
    assert r.exit_code == 0 and "B1 = 0.0036" in r.output
    r = CliRunner().invoke(main, ["bounds", "--k", "8", "--n", "1000", "--p-star", "0", "--v-star", "8"])
    assert r.exit_code == 0 and "B2 = 0.001125" in r.output


def test_bounds_extensions():
    r = CliRunner().invoke(main, ["bounds", "--k", "2", "--n", "1000", "--p-opt", "0.1", "--max-delay", "10",
                                  "--max-delay", "30", "--alpha", "0.2", "--mu", "0.5",
                                  "--observed-errors", "100"])
    assert r.exit_code == 0, r.output
    assert "delayed = " in r.output and "async = " in r.output and "missing = " in r.output


def test_bounds_not_applicable_exit_code():
    r = CliRunner().invoke(main, ["bounds", "--k", "8", "--n", "1000", "--p-opt", "0.1",
                                  "--mu", "0.1", "--observed-errors", "100"])
    assert r.exit_code == EXIT_NOT_APPLICABLE
    assert "not applicable" in r.output


def test_bounds_range_error():
    r = CliRunner().invoke(main, ["bounds", "--k", "8", "--n", "1000", "--p-star", "0.1", "--v-star", "9"])
    assert r.exit_code == EXIT_INVALID


def _run_with_traces(tmp_path):
    cfg = write_cfg(tmp_path / "c.yaml", output={"name": "t", "traces": True},
                    environment={"max_delay": 3, "label_prob": 0.7}, aggregators=["pwm", "epwm", "am"])
    res = CliRunner().invoke(main, ["run", str(cfg), "-o", str(tmp_path / "o")])
    assert res.exit_code == 0, res.output
    return cfg, tmp_path / "o"


def test_replay_reproduces_metrics(tmp_path):
    cfg, out = _run_with_traces(tmp_path)
    r = CliRunner().invoke(main, ["replay", str(out / "traces" / "t-p0-s2.jsonl"), str(cfg)])
    assert r.exit_code == 0, r.output
    replayed = json.loads(r.output)["metrics"]
    original = [json.loads(l) for l in (out / "t.records.jsonl").read_text().splitlines()[1:]]
    for rec in original:
        if rec["seed"] == 2:
            ref = {k: v for k, v in rec.items() if k not in ("seed", "point", "bounds")}
            assert replayed[rec["aggregator"]] == ref


def test_replay_other_aggregator(tmp_path):
    cfg, out = _run_with_traces(tmp_path)
    r = CliRunner().invoke(main, ["replay", str(out / "traces" / "t-p0-s1.jsonl"), str(cfg), "-a", "alone"])
    assert r.exit_code == 0
    assert list(json.loads(r.output)["metrics"]) == ["alone"]


def test_replay_truncated(tmp_path):
    cfg, out = _run_with_traces(tmp_path)
    trace = out / "traces" / "t-p0-s1.jsonl"
    trace.write_bytes(trace.read_bytes()[:-7])
    r = CliRunner().invoke(main, ["replay", str(trace), str(cfg)])
    assert r.exit_code == EXIT_INVALID
    assert "byte offset" in r.output
