"""CLI subcommand dispatch and outputs."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from langdrive.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


class TestSimulate:
    def test_headless_run_writes_artifacts(self, tmp_path, capsys):
        code = main([
            "simulate", "--duration", "4", "--out-dir", str(tmp_path / "run"),
            "--prompt", "Drive normally!",
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["crashed"] is False
        assert Path(summary["state_log"]).exists()

    def test_scheduled_prompt_syntax(self, tmp_path, capsys):
        code = main([
            "simulate", "--duration", "3", "--prompt", "1.0:Reverse the car!",
            "--out-dir", str(tmp_path),
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["param_updates"] >= 0


class TestEvalDecision:
    def test_oracle_small_run(self, capsys):
        code = main(["eval-decision", "--n", "6", "--oracle"])
        assert code == 0
        out = capsys.readouterr().out
        assert "100.00%" in out
        payload = json.loads(out.split("\n", 2)[2])
        assert payload["pairs"] == 48


class TestEvalControl:
    def test_reversing_scenario_json_on_stdout(self, capsys):
        code = main([
            "eval-control", "--scenario", "reversing", "--backend", "scripted",
            "--duration", "10",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        scenario = payload["scenarios"][0]
        assert scenario["scenario"] == "reversing"
        assert scenario["completed"] is True
        assert scenario["improvement_pct"] > 50.0


class TestGenDataset:
    def test_mpc_kind_line_count(self, tmp_path, capsys):
        out = tmp_path / "mpc.jsonl"
        code = main(["gen-dataset", "--kind", "mpc", "--n", "15", "--out", str(out)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["lines"] == 15
        assert len(out.read_text().splitlines()) == 15

    def test_decision_kind(self, tmp_path, capsys):
        out = tmp_path / "dec.jsonl"
        code = main(["gen-dataset", "--kind", "decision", "--n", "5", "--out", str(out)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 5

    def test_mpc_default_count(self, tmp_path, capsys):
        out = tmp_path / "mpc_default.jsonl"
        code = main(["gen-dataset", "--kind", "mpc", "--out", str(out)])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["lines"] == 150
        assert len(out.read_text().splitlines()) == 150


class TestUsage:
    def test_unknown_flag_exits_nonzero(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--bogus"])
        assert excinfo.value.code != 0

    def test_replay_requires_transcript(self):
        with pytest.raises(SystemExit):
            main(["simulate", "--backend", "replay", "--duration", "1"])

    def test_replay_with_transcript(self, tmp_path, capsys):
        code = main([
            "simulate", "--backend", "replay",
            "--transcript", str(FIXTURES / "crash_recovery_transcript.jsonl"),
            "--duration", "3", "--prompt", "Drive normally!",
        ])
        assert code == 0
