import json

import pytest
from click.testing import CliRunner

from pttengine.bench import bundled_path
from pttengine.cli import main

from golden import NIKTO_COMMAND, NMAP_COMMAND, MODEL_COMPLETION_COUNTS


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def demo_config(tmp_path):
    config = {
        "backend_name": "scripted",
        "script_path": "bundled:demo_script.json",
        "session_dir": str(tmp_path / "sessions"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return str(path)


def invoke(runner, demo_config, *args, **kwargs):
    return runner.invoke(main, ["--config", demo_config, *args], **kwargs)


def test_start_then_next_prints_nmap(runner, demo_config):
    result = invoke(runner, demo_config, "start",
                    "obtain root on the benchmark machine",
                    "Linux machine at 192.168.1.5")
    assert result.exit_code == 0, result.output
    assert "1. Penetration Testing - (todo)" in result.output

    result = invoke(runner, demo_config, "next")
    assert result.exit_code == 0, result.output
    assert NMAP_COMMAND in result.output


def test_full_demo_walkthrough(runner, demo_config):
    invoke(runner, demo_config, "start", "own the box", "Linux machine at 192.168.1.5")
    first = invoke(runner, demo_config, "next")
    assert NMAP_COMMAND in first.output
    nmap_path = bundled_path("demo_nmap.txt")
    submitted = invoke(runner, demo_config, "submit",
                       "--category", "tool-output", "--file", str(nmap_path))
    assert submitted.exit_code == 0, submitted.output
    assert "revision 2" in submitted.output
    second = invoke(runner, demo_config, "next")
    assert NIKTO_COMMAND in second.output
    shown = invoke(runner, demo_config, "tree")
    assert "Port and Service Scanning - (completed)" in shown.output


def test_submit_unknown_category_is_usage_error(runner, demo_config, tmp_path):
    invoke(runner, demo_config, "start", "goal", "Linux machine at 192.168.1.5")
    cursor_before = (tmp_path / "sessions" / "current.cursor").read_text()
    result = invoke(runner, demo_config, "submit", "--category", "bogus",
                    input="data\n")
    assert result.exit_code == 2
    # no engine call happened: the script cursor did not move
    assert (tmp_path / "sessions" / "current.cursor").read_text() == cursor_before


def test_next_without_engagement_is_engine_error(runner, demo_config):
    result = invoke(runner, demo_config, "next")
    assert result.exit_code == 1


def test_engine_errors_exit_1_with_machine_readable_line(runner, tmp_path):
    deadlocked = tmp_path / "script.json"
    deadlocked.write_text(json.dumps(
        [{"reply": "1. root - (todo)\n    1.1. all done - (completed)"}]
    ))
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "script_path": str(deadlocked),
        "session_dir": str(tmp_path / "sessions"),
    }))
    runner = CliRunner()
    runner.invoke(main, ["--config", str(config_path), "start", "goal",
                         "target machine"])
    result = runner.invoke(main, ["--config", str(config_path), "next"])
    assert result.exit_code == 1
    error = json.loads(result.stderr.strip().splitlines()[-1])
    assert error["error"] == "deadlock-reached"


def test_save_and_load_roundtrip(runner, demo_config, tmp_path):
    invoke(runner, demo_config, "start", "goal", "Linux machine at 192.168.1.5")
    saved = tmp_path / "exported.json"
    result = invoke(runner, demo_config, "save", str(saved))
    assert result.exit_code == 0
    assert saved.exists()
    result = invoke(runner, demo_config, "load", str(saved))
    assert result.exit_code == 0
    assert "Penetration Testing" in result.output


def test_feedback_and_revise(runner, tmp_path):
    script = [
        {"reply": "1. root - (todo)\n    1.1. scan - (todo)"},
        {"reply": "scanning first maps the attack surface"},
        {"reply": "1. root - (todo)\n    1.1. scan - (not-applicable)"},
    ]
    script_path = tmp_path / "script.json"
    script_path.write_text(json.dumps(script))
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "script_path": str(script_path),
        "session_dir": str(tmp_path / "sessions"),
    }))
    runner.invoke(main, ["--config", str(config_path), "start", "goal", "box"])
    asked = runner.invoke(main, ["--config", str(config_path), "feedback", "why scan?"])
    assert "attack surface" in asked.output
    revised = runner.invoke(main, ["--config", str(config_path), "revise",
                                   "drop the scan task"])
    assert "revision 2" in revised.output


def test_bench_load_reports_totals(runner):
    result = runner.invoke(main, ["bench", "load"])
    assert result.exit_code == 0, result.output
    assert "13 targets, 182 sub-tasks, 26 categories" in result.output
    assert "easy: 7 targets, 77 sub-tasks" in result.output


def test_bench_score_totals_1400(runner):
    result = runner.invoke(main, ["bench", "score"])
    assert result.exit_code == 0, result.output
    assert "total: 1400" in result.output
    assert "[ok] login (100)" in result.output
    assert "[x] MATRIX (500)" in result.output


def test_bench_report_gpt4_row(runner, tmp_path, benchmark_records_file):
    result = runner.invoke(main, ["bench", "report", "--in", benchmark_records_file])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0].startswith("label,")
    assert lines[1].startswith("GPT-4,")
    assert "52.20%" in lines[1]


@pytest.fixture()
def benchmark_records_file(tmp_path):
    from pttengine.bench import bundled_benchmark_path, load_benchmark

    from test_bench import records_for_counts

    benchmark = load_benchmark(bundled_benchmark_path())
    records = records_for_counts(benchmark, MODEL_COMPLETION_COUNTS["GPT-4"])
    doc = {
        "label": "GPT-4",
        "records": [
            {
                "target_id": r.target_id,
                "trial_index": r.trial_index,
                "per_subtask": r.per_subtask,
                "overall_success": r.overall_success,
            }
            for r in records
        ],
    }
    path = tmp_path / "records.json"
    path.write_text(json.dumps(doc))
    return str(path)
