"""Engine-side subprocess executor against the real runner harness.

This is the seam between the two packages: the engine only ever spawns
``<interpreter> sandbox_runner.py <payload> <timeout>`` and parses the
envelope, so that exact contract is what gets exercised here.
"""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

from tableqa.solver import (
    PotSolution,
    SandboxConfig,
    SubprocessExecutor,
    execute,
)

RUNNER = Path(__file__).resolve().parents[1] / "sandbox_runner.py"


def runner_config(timeout_s=5) -> SandboxConfig:
    return SandboxConfig(
        interpreter_command=[sys.executable, str(RUNNER)], timeout_s=timeout_s
    )


def test_ok_run_round_trips_stdout(tmp_path):
    table = tmp_path / "all.csv"
    table.write_text("a\n1\n2\n", encoding="utf-8")
    solution = PotSolution("count rows", "print(open('all.csv').read().count('\\n') - 1)")
    obs = execute(solution, str(table), runner_config(), SubprocessExecutor())
    assert obs.status == "ok"
    assert obs.stdout == "2\n"


def test_exception_becomes_nonzero_exit(tmp_path):
    table = tmp_path / "all.csv"
    table.write_text("a\n1\n", encoding="utf-8")
    obs = execute(PotSolution("t", "raise ValueError('nope')"), str(table), runner_config(), SubprocessExecutor())
    assert obs.status == "nonzero_exit"
    assert "ValueError" in obs.stderr
    assert "Traceback" in obs.stderr


def test_infinite_loop_times_out(tmp_path):
    table = tmp_path / "all.csv"
    table.write_text("a\n1\n", encoding="utf-8")
    obs = execute(
        PotSolution("t", "while True: pass"), str(table), runner_config(timeout_s=2), SubprocessExecutor()
    )
    assert obs.status == "timeout"
    assert obs.duration_ms < 10_000


def test_source_table_untouched_by_hostile_code(tmp_path):
    table = tmp_path / "all.csv"
    table.write_text("a\n1\n", encoding="utf-8")
    hostile = "open('all.csv', 'w').write('wiped')"  # hits the temp copy only
    obs = execute(PotSolution("t", hostile), str(table), runner_config(), SubprocessExecutor())
    assert obs.status == "ok"
    assert table.read_text(encoding="utf-8") == "a\n1\n"


def test_launch_failure_when_interpreter_missing(tmp_path):
    cfg = SandboxConfig(interpreter_command=["/no/such/interpreter"], timeout_s=2)
    obs = execute(PotSolution("t", "print(1)"), "absent.csv", cfg, SubprocessExecutor())
    assert obs.status == "launch_failure"


def test_stdout_cap_applies_to_envelope(tmp_path):
    table = tmp_path / "all.csv"
    table.write_text("a\n1\n", encoding="utf-8")
    cfg = SandboxConfig(
        interpreter_command=[sys.executable, str(RUNNER)], timeout_s=5, output_cap_bytes=64
    )
    obs = execute(PotSolution("t", "print('x' * 5000)"), str(table), cfg, SubprocessExecutor())
    assert obs.status == "ok"
    assert obs.stdout.endswith("...[truncated]")
    assert len(obs.stdout) < 5000


@pytest.mark.parametrize("code,expected", [("print('hi')", "ok"), ("1/0", "nonzero_exit")])
def test_status_mapping(tmp_path, code, expected):
    table = tmp_path / "all.csv"
    table.write_text("a\n1\n", encoding="utf-8")
    obs = execute(PotSolution("t", code), str(table), runner_config(), SubprocessExecutor())
    assert obs.status == expected
