import json

import pytest

from ltlshaping.cli import main, read_spec


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(
        "name: small\n"
        "automaton: fixture\n"
        "env: {name: example, variant: noisy}\n"
        "reward: {kind: adaptive_hybrid, theta: 100}\n"
        "schedule: {interval: 40}\n"
        "learner: {budget: 120, trials: 2, seed: 3, eval_every: 40, eval_episodes: 2, final_eval_episodes: 3}\n"
        "output: out\n"
    )
    return path


def test_compile_fixture(capsys):
    assert main(["compile", "--automaton", "fixture"]) == 0
    out = capsys.readouterr().out
    assert "q0: 2" in out and "q3: 15" in out
    assert "B0 = {q4}" in out and "B1 = {q1, q2}" in out and "B2 = {q0}" in out and "B3 = {q3}" in out


def test_compile_formula_writes_files(tmp_path, capsys):
    assert main(["compile", "-f", "F a & F b", "--ap", "a,b", "-o", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["states"] == 4 and report["ap"] == ["a", "b"]
    assert (tmp_path / "dfa.dot").read_text().startswith("digraph")
    assert main(["compile", "--automaton", str(tmp_path / "dfa.json")]) == 0


def test_compile_spec_file(tmp_path, capsys):
    spec = tmp_path / "task.ltl"
    spec.write_text("# comment\nap: o b y\n!y U (o & (!y U b))\n")
    assert read_spec(str(spec)) == ("!y U (o & (!y U b))", ("o", "b", "y"))
    assert main(["compile", str(spec)]) == 0
    assert "states:" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["compile", "-f", "F (a &"],
        ["compile", "-f", "!F a"],
        ["compile", "-f", "F z", "--ap", "a"],
        ["compile"],
        ["compile", "--automaton", "/no/such/file.json"],
        ["run", "no_such_config"],
        ["oracle", "no_such_config"],
        ["sweep", "example_det_adaptive_hybrid"],
        ["evaluate", "example_det_adaptive_hybrid", "--episodes", "0"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 1
    assert capsys.readouterr().err


def test_syntax_error_message_has_position(capsys):
    main(["compile", "-f", "F (a &"])
    assert "position 6" in capsys.readouterr().err


def test_run_writes_outputs(small_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", str(small_cfg), "-o", str(out)]) == 0
    assert "success_rate" in capsys.readouterr().out
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0].startswith("# ltlshaping 0.1.0 config_sha256=")
    assert metrics[1] == "trial,step,episodes,success_rate,norm_return,empirical_b,round_k"
    assert len(metrics) == 2 + 2 * 3
    for name in ("summary.json", "rounds.json", "config.json", "trials/trial_000.csv", "trials/qtable_001.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 2 and len(summary["empirical_b"]) == 2

    # evaluate a saved table
    assert main(["evaluate", str(small_cfg), "--qtable", str(out / "trials/qtable_000.json"), "--episodes", "3"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert set(m) == {"success_rate", "norm_return", "empirical_b"}


def test_run_overrides_and_budget_zero(small_cfg, tmp_path, capsys):
    out = tmp_path / "zero"
    assert main(["run", str(small_cfg), "-o", str(out), "--budget", "0", "--trials", "1"]) == 0
    assert "n/a" in capsys.readouterr().out
    assert len((out / "metrics.csv").read_text().splitlines()) == 2


def test_parallel_matches_serial(small_cfg, tmp_path):
    main(["run", str(small_cfg), "-o", str(tmp_path / "a"), "-j", "1"])
    main(["run", str(small_cfg), "-o", str(tmp_path / "b"), "-j", "2"])
    assert (tmp_path / "a/metrics.csv").read_bytes() == (tmp_path / "b/metrics.csv").read_bytes()


def test_evaluate_random_policy(capsys):
    assert main(["evaluate", "example_det_adaptive_hybrid", "--episodes", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["success_rate"] == 0.0


def test_oracle_examples(tmp_path, capsys):
    report = tmp_path / "oracle.json"
    assert main(["oracle", "example_oracle", "-o", str(report)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 14 and all(ln.startswith("PASS") for ln in lines)
    assert json.loads(report.read_text())["ok"] is True


def test_oracle_refuses_non_enumerable(tmp_path, capsys):
    cfg = tmp_path / "ne.yaml"
    cfg.write_text("name: ne\nautomaton: fixture\nenv: {name: example, enumerable: false}\n")
    assert main(["oracle", str(cfg)]) == 1
    assert "not enumerable" in capsys.readouterr().err


def test_oracle_check_failure_exits_2(tmp_path, capsys):
    (tmp_path / "c.map").write_text("BA" + "." * 40 + "ob\n")
    cfg = tmp_path / "fail.yaml"
    cfg.write_text(
        "name: fail\nautomaton: fixture\n"
        "env: {name: grid, map: c.map, horizon: 42}\n"
        "oracle: {kinds: [adaptive_progression], theta: 2, margin: 0}\n"
    )
    assert main(["oracle", str(cfg)]) == 2
    assert capsys.readouterr().out.startswith("FAIL")


def test_sweep(tmp_path, capsys):
    cfg = tmp_path / "sw.yaml"
    cfg.write_text(
        "name: sw\nautomaton: fixture\nenv: {name: example}\n"
        "learner: {budget: 20, trials: 1, eval_every: 10, eval_episodes: 1, final_eval_episodes: 1}\n"
        "sweep: {reward.theta: [10, 100]}\n"
    )
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "out")]) == 0
    summary = json.loads((tmp_path / "out/sweep_summary.json").read_text())
    assert sorted(summary) == ["sw_theta=10", "sw_theta=100"]


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
