import json

import pytest

from roi_nbv import cli
from roi_nbv.config import ConfigError, RunConfig
from roi_nbv.evaluation import parse_results, summarize


def write_config(tmp_path, text):
    p = tmp_path / "run.yaml"
    p.write_text(text)
    return p


def test_generate_prints_count_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert cli.main(["generate", "--scenario", "3", "--seed", "2", "--out", str(a)]) == 0
    assert "42" in capsys.readouterr().out
    assert cli.main(["generate", "--scenario", "3", "--seed", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_bad_scenario(tmp_path, capsys):
    assert cli.main(["generate", "--scenario", "7", "--seed", "0", "--out", str(tmp_path / "x")]) == 1
    assert "1, 2, 3" in capsys.readouterr().err


def test_generate_unwritable(tmp_path):
    assert cli.main(["generate", "--scenario", "1", "--out", str(tmp_path / "missing" / "x.txt")]) == 1


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 1


def test_config_rejects_unknown_keys(tmp_path, capsys):
    p = write_config(tmp_path, "scenario: 1\nwobble: 2\n")
    assert cli.main(["run", "--config", str(p)]) == 1
    assert "wobble" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="planner.speed"):
        RunConfig.from_dict({"planner": {"speed": 1}})
    with pytest.raises(ConfigError):
        RunConfig(trials=0)
    with pytest.raises(ConfigError):
        RunConfig(planners=[])
    with pytest.raises(ConfigError):
        RunConfig(planners=["teleport"])


def test_run_budget_zero_and_report(tmp_path, capsys):
    out = tmp_path / "out"
    p = write_config(tmp_path, f"scenario: 1\ntrials: 2\nbudget: 0.0\noutput_dir: {out}\n")
    assert cli.main(["run", "--config", str(p)]) == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["budget"] == 0.0
    capsys.readouterr()
    assert cli.main(["report", "--results", str(out / "results.csv")]) == 0
    report = capsys.readouterr().out
    assert "combined" in report and "global_only" in report and "# curves" in report


def test_run_uses_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ROIVP_OUT_DIR", str(tmp_path / "envout"))
    p = write_config(tmp_path, "scenario: 1\ntrials: 1\nbudget: 0.0\nplanners: [global_only]\n")
    assert cli.main(["run", "--config", str(p)]) == 0
    assert (tmp_path / "envout" / "results.csv").exists()


def test_flags_override_file(tmp_path):
    out = tmp_path / "o"
    p = write_config(tmp_path, "scenario: 1\ntrials: 5\nbudget: 3.0\nplanners: [combined]\n")
    assert cli.main(["run", "--config", str(p), "--trials", "1", "--budget", "0", "--out-dir", str(out)]) == 0
    assert len((out / "results.csv").read_text().splitlines()) == 2


def test_report_matches_summarize(tmp_path, capsys):
    text = ("planner,seed,plan_length_m,detected_rois,covered_volume\n"
            "a,0,0.0,1,0.1\na,0,1.0,3,0.3\na,1,0.0,1,0.1\na,1,1.5,5,0.5\n"
            "b,0,0.0,1,0.1\nb,0,1.2,2,0.2\nb,1,0.0,0,0.0\nb,1,1.1,2,0.4\n")
    p = tmp_path / "r.csv"
    p.write_text(text)
    assert cli.main(["report", "--results", str(p)]) == 0
    report = capsys.readouterr().out
    s = summarize(parse_results(text))
    assert s.groups["a"].rois_mean == 4.0 and s.groups["b"].volume_mean == pytest.approx(0.3)
    assert "4.00 ± 1.41" in report and "0.300 ± 0.141" in report


def test_report_errors(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("")
    assert cli.main(["report", "--results", str(p)]) == 1
    p.write_text("planner,seed,plan_length_m,detected_rois,covered_volume\na,0,0,1\n")
    assert cli.main(["report", "--results", str(p)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_stalled_trials_exit_code(tmp_path, monkeypatch):
    from roi_nbv.evaluation import TrialRecord

    def fake(args):
        cfg, planner, seed = args
        return TrialRecord(planner, seed, [(0.0, 1, 0.1)], {"budget": cfg.budget}, [("stalled", None)], 0.0)

    monkeypatch.setattr(cli, "_trial_job", fake)
    p = write_config(tmp_path, f"scenario: 1\ntrials: 2\nbudget: 6.0\noutput_dir: {tmp_path / 'o'}\n")
    assert cli.main(["run", "--config", str(p)]) == 3


def test_runtime_failure_exit_code(tmp_path, monkeypatch):
    def boom(args):
        raise RuntimeError("simulated failure")

    monkeypatch.setattr(cli, "_trial_job", boom)
    p = write_config(tmp_path, f"scenario: 1\ntrials: 1\noutput_dir: {tmp_path / 'o'}\n")
    assert cli.main(["run", "--config", str(p)]) == 2
