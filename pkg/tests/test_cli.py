import json
import subprocess
import sys

import pytest

from pinsky import level as lv
from pinsky.agents import PolicyNet, save_params
from pinsky.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from pinsky.config import OUTPUT_DIR_ENV

SMALL = ["--max-game-len", "60", "--n-games", "8", "--pop-size", "4", "--mutation-timer", "2",
         "--max-children", "3", "--transfer-timer", "2", "--max-envs", "3", "--random-trials", "3",
         "--mcts-trials", "1", "--mcts-budget", "40", "--conv1", "2", "--conv2", "2",
         "--hidden", "8", "--quiet"]


@pytest.fixture(scope="module")
def solved_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run", *SMALL, "--loops", "20", "--seed", "2", "--out", str(out)]) == EXIT_OK
    return out


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--max-game-len", "--n-games", "--max-envs", "--jobs", "--preset"):
        assert flag in text
    assert "(default: 500)" in text and "(default: 1500)" in text


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--pop-size", "2", "--out", str(tmp_path)]) == EXIT_USAGE
    assert "pop_size" in capsys.readouterr().err
    assert main(["run", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["run", "--seed-level", str(tmp_path / "none.txt"), "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["run", "--mc-enabled", "maybe"]) == EXIT_USAGE
    assert main(["analyze", str(tmp_path / "x"), "--gamma", "0.3"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["run", "--no-such-flag"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_runtime_errors_exit_2(tmp_path):
    assert main(["analyze", str(tmp_path / "missing.jsonl")]) == EXIT_RUNTIME
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"type": "header"')
    assert main(["analyze", str(bad)]) == EXIT_RUNTIME


def test_config_file_and_env_output_dir(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "small.cfg"
    cfg.write_text("# tiny run\nnum_poet_loops = 0\nvariant = multiDoor\n")
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert main(["run", "--config", str(cfg), "--quiet"]) == EXIT_OK
    log = tmp_path / "env" / "multidoor-default-seed0" / "runlog.jsonl"
    assert log.is_file()
    assert "variant = multiDoor" in (log.parent / "config.txt").read_text()
    capsys.readouterr()
    assert main(["analyze", str(log)]) == EXIT_OK
    summary = json.loads((log.parent / "analysis" / "summary.json").read_text())
    assert summary["n_species"] == 1 and summary["n_levels"] == 1


def test_analyze_and_replay_solved_level(solved_run, capsys):
    log = solved_run / "runlog.jsonl"
    assert main(["analyze", str(log), "--out", str(solved_run / "rep"), "--compare", str(log)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "P(solved | IST)" in out and "rank test" in out
    solve = next(json.loads(l) for l in log.read_text().splitlines() if '"type":"solve"' in l)
    assert main(["replay", str(log), "--env-id", str(solve["env_id"])]) == EXIT_OK
    out = capsys.readouterr().out
    assert "final status won" in out and "step 0" in out


def test_replay_refuses_mismatched_architecture(solved_run, tmp_path, capsys):
    log = solved_run / "runlog.jsonl"
    level = lv.load(lv.bundled("singledoor"))
    other = PolicyNet(level.height, level.width, 3, 3, 5)
    path = tmp_path / "foreign.bin"
    save_params(path, other.init_params(0), other)
    assert main(["replay", str(log), "--env-id", "0", "--agent", str(path)]) == EXIT_RUNTIME
    assert "refusing to replay" in capsys.readouterr().err
    assert main(["replay", str(log), "--env-id", "999"]) == EXIT_RUNTIME


def test_replay_detects_tampered_agent(solved_run, tmp_path):
    import shutil
    copy = tmp_path / "copy"
    shutil.copytree(solved_run, copy)
    log = copy / "runlog.jsonl"
    solve = next(json.loads(l) for l in log.read_text().splitlines() if '"type":"solve"' in l)
    agent = copy / solve["agent"]
    agent.write_bytes(agent.read_bytes()[:-1] + b"\x00")
    assert main(["replay", str(log), "--env-id", str(solve["env_id"]), "--quiet"]) == EXIT_RUNTIME


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pinsky.cli", "run", "--loops", "0", "--quiet",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "pinsky.cli", "analyze", str(tmp_path / "nope")],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_jobs_flag_matches_serial_run(tmp_path):
    args = ["run", *SMALL, "--loops", "4", "--seed", "5"]
    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--jobs", "2", "--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "a" / "runlog.jsonl").read_bytes() == (tmp_path / "b" / "runlog.jsonl").read_bytes()
    assert main([*args, "--jobs", "0", "--out", str(tmp_path / "c")]) == EXIT_USAGE


def test_ablation_table_and_reuse(tmp_path):
    from pinsky.ablation import ablation, format_table

    base = dict(max_game_len=40, n_games=8, pop_size=4, mutation_timer=2, max_children=3,
                max_envs=3, random_trials=3, mcts_trials=1, mcts_budget=30, conv1=2, conv2=2, hidden=8)
    table = ablation("singleDoor", [0, 1], tmp_path, loops=4, base=base)
    assert [r["condition"] for r in table["runs"]] == ["MC", "MC", "noMC", "noMC"]
    assert set(table["MC"]) == {"median_species", "median_largest_share"}
    assert isinstance(table["species_direction_holds"], bool)
    assert (tmp_path / "ablation.csv").read_text().count("\n") == 5
    before = (tmp_path / "singledoor-aligned-seed0" / "runlog.jsonl").stat().st_mtime_ns
    again = ablation("singleDoor", [0, 1], tmp_path, loops=4, base=base)
    assert again == table
    assert (tmp_path / "singledoor-aligned-seed0" / "runlog.jsonl").stat().st_mtime_ns == before
    assert "median species" in format_table(table)
