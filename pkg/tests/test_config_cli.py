import json

import pytest

from dcsched import cli
from dcsched.cluster import ConfigError
from dcsched.config import RunConfig, apply_override

from helpers import make_config

BASE = {
    "scheduler": "megha",
    "topology": {"gm_count": 2, "lm_count": 2, "workers_per_partition": 3},
    "workload": {"synthetic": {"jobs": 4, "tasks_per_job": 3,
                               "task_duration": 0.5, "load": 0.5}},
}


def _write(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_defaults_are_materialized():
    cfg = RunConfig.from_dict(dict(BASE))
    d = cfg.to_dict()
    assert d["net_delay"] == 0.0005
    assert d["heartbeat"] == 5.0
    assert d["batch_limit"] == 50
    assert d["owner_notify"] == "immediate"
    assert d["sparrow"]["d"] == 2
    assert d["eagle"]["short_fraction"] == 0.1
    assert d["pigeon"]["weight"] == 2


def test_unknown_keys_rejected_at_top_level_and_nested():
    with pytest.raises(ConfigError, match="bogus"):
        RunConfig.from_dict({**BASE, "bogus": 1})
    with pytest.raises(ConfigError, match="sparrow"):
        RunConfig.from_dict({**BASE, "sparrow": {"dd": 3}})
    with pytest.raises(ConfigError, match="workload"):
        RunConfig.from_dict({**BASE, "workload": {"synthetic": {}, "x": 1}})


def test_bad_scheduler_rejected():
    with pytest.raises(ConfigError, match="scheduler"):
        RunConfig.from_dict({**BASE, "scheduler": "borg"})


def test_workload_needs_exactly_one_source():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**BASE, "workload": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**BASE, "workload": {
            "trace": "t.txt", "synthetic": {"jobs": 1}}})


def test_config_echo_roundtrips():
    cfg = RunConfig.from_dict(dict(BASE))
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_changes_with_content():
    a = RunConfig.from_dict(dict(BASE))
    b = RunConfig.from_dict({**BASE, "seed": 9})
    assert a.digest() != b.digest()


def test_overrides_apply_dotted_paths():
    data = json.loads(json.dumps(BASE))
    apply_override(data, "seed=5")
    apply_override(data, "sparrow.d=3")
    apply_override(data, "workload.synthetic.load=0.25")
    cfg = RunConfig.from_dict(data)
    assert cfg.seed == 5 and cfg.sparrow.d == 3
    assert cfg.workload.synthetic.load == 0.25


def test_override_requires_key_value_shape():
    with pytest.raises(ConfigError):
        apply_override({}, "oops")


def test_cli_run_writes_report(tmp_path):
    cfg_path = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["run", "-c", cfg_path, "-o", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["scheduler"] == "megha"
    assert summary["job_count"] == 4
    assert summary["config"]["seed"] == 0
    # the embedded echo re-parses to the run's exact configuration
    echoed = RunConfig.from_dict(summary["config"])
    assert echoed == RunConfig.from_dict(dict(BASE))
    assert echoed.digest() == summary["config_digest"]
    lines = (out / "jobs.csv").read_text().splitlines()
    assert lines[0] == ("job_id,class,submit_time,finish_time,jct,"
                        "ideal_jct,delay,task_count")
    assert len(lines) == 1 + 4


def test_cli_run_is_byte_deterministic(tmp_path):
    cfg_path = _write(tmp_path, {**BASE, "scheduler": "eagle"})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "-c", cfg_path, "-o", str(out1)]) == 0
    assert cli.main(["run", "-c", cfg_path, "-o", str(out2)]) == 0
    assert (out1 / "summary.json").read_bytes() == \
        (out2 / "summary.json").read_bytes()
    assert (out1 / "jobs.csv").read_bytes() == (out2 / "jobs.csv").read_bytes()


def test_cli_events_log(tmp_path):
    cfg_path = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["run", "-c", cfg_path, "-o", str(out), "--events"]) == 0
    lines = (out / "events.log").read_text().splitlines()
    assert lines
    first = json.loads(lines[0])
    assert set(first) == {"time", "entity", "kind", "detail"}


def test_cli_bad_scheduler_is_usage_error(tmp_path):
    cfg_path = _write(tmp_path, {**BASE, "scheduler": "nope"})
    assert cli.main(["run", "-c", cfg_path, "-o", str(tmp_path / "o")]) == 1


def test_cli_bad_flag_is_usage_error():
    assert cli.main(["run", "--nonsense"]) == 1


def test_cli_compare_single_config_factors_are_one(tmp_path):
    cfg_path = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["compare", "-c", cfg_path, "--schedulers", "megha",
                     "-o", str(out)]) == 0
    rows = (out / "compare.csv").read_text().splitlines()
    assert rows[0].startswith("scheduler,")
    cells = rows[1].split(",")
    assert cells[0] == "megha"
    assert cells[-3:] == ["1.0", "1.0", "1.0"]


def test_cli_compare_all_four(tmp_path):
    cfg_path = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["compare", "-c", cfg_path, "-o", str(out)]) == 0
    rows = (out / "compare.csv").read_text().splitlines()
    assert len(rows) == 5


def test_cli_sweep(tmp_path):
    cfg_path = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert cli.main(["sweep", "-c", cfg_path, "--loads", "0.2,0.5",
                     "-o", str(out)]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "load,dc_size,median_delay,p95_delay,inconsistency_ratio"
    assert len(rows) == 3


def test_cli_sweep_rejects_empty_or_oversized_loads(tmp_path):
    cfg_path = _write(tmp_path, BASE)
    assert cli.main(["sweep", "-c", cfg_path, "--loads", "",
                     "-o", str(tmp_path / "o")]) == 1
    assert cli.main(["sweep", "-c", cfg_path, "--loads", "1.5",
                     "-o", str(tmp_path / "o")]) == 1


def test_cli_trace_synth_and_stats(tmp_path, capsys):
    cfg_path = _write(tmp_path, BASE)
    trace_path = tmp_path / "trace.txt"
    assert cli.main(["trace", "synth", "-c", cfg_path,
                     "-o", str(trace_path)]) == 0
    assert cli.main(["trace", "stats", str(trace_path)]) == 0
    outputs = capsys.readouterr().out
    assert "jobs:" in outputs and "tasks:" in outputs
    assert "12" in outputs  # 4 jobs x 3 tasks


def test_cli_trace_stats_parse_error(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0.0 2 1.0\n")
    assert cli.main(["trace", "stats", str(bad)]) == 1


def test_cli_invariant_violation_exit_code(tmp_path, monkeypatch):
    from dcsched.metrics import ConservationError

    def boom(cfg, jobs=None, collect_events=False):
        raise ConservationError("injected")

    monkeypatch.setattr("dcsched.cli.runner.run_once", boom)
    cfg_path = _write(tmp_path, BASE)
    assert cli.main(["run", "-c", cfg_path, "-o", str(tmp_path / "o")]) == 2


def test_compare_requires_shared_workloads():
    from dcsched.runner import validate_shared_workload
    a = make_config(scheduler="megha", jobs=3)
    b = make_config(scheduler="sparrow", jobs=4)
    with pytest.raises(ConfigError):
        validate_shared_workload([a, b])
    validate_shared_workload([a, a.replace(scheduler="sparrow")])
