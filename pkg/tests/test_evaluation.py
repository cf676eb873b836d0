"""Adherence labels, dataset generation, accuracy evaluation, scenarios."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from langdrive.evaluation import (
    COMMAND_SUITE,
    CONTROL_SCENARIOS,
    ControlReport,
    ScenarioResult,
    dataset_to_jsonl,
    eval_decision_accuracy,
    gen_finetune_dataset,
    gen_state_dataset,
    label_adherence,
    rmse,
    run_control_scenario,
    scenario_by_id,
)
from langdrive.gateway import ScriptedBackend
from langdrive.sim import SnapshotSample, StateSnapshot

COMMANDS = {command.id: command for command in COMMAND_SUITE}


def snapshot_from(s_speed, d, dist_left=1.0, dist_right=1.0, crashed=False):
    samples = tuple(
        SnapshotSample(s=float(i), d=float(di), s_speed=float(vi), d_speed=0.0,
                       dist_left=dist_left, dist_right=dist_right)
        for i, (vi, di) in enumerate(zip(s_speed, d))
    )
    return StateSnapshot(duration=2.0, samples=samples, crashed=crashed)


def oscillating_snapshot():
    return snapshot_from(
        s_speed=[1.0, 1.0, 0.9, 1.1],
        d=[-0.6, 0.6, -0.65, 0.61],
        dist_left=1.0,
        dist_right=0.1,
    )


class TestLabels:
    def test_slow_oscillating_window_fails_speed(self):
        assert label_adherence(oscillating_snapshot(), COMMANDS["speed"]) is False

    def test_oscillating_window_is_oscillating(self):
        assert label_adherence(oscillating_snapshot(), COMMANDS["oscillating"]) is True

    def test_oscillating_window_is_close_to_wall(self):
        assert label_adherence(oscillating_snapshot(), COMMANDS["close_wall"]) is True

    def test_all_zero_is_stopped(self):
        snapshot = snapshot_from(s_speed=[0, 0, 0, 0], d=[0, 0, 0, 0])
        assert label_adherence(snapshot, COMMANDS["stop"]) is True
        assert label_adherence(snapshot, COMMANDS["forward"]) is False
        assert label_adherence(snapshot, COMMANDS["reversed"]) is False
        assert label_adherence(snapshot, COMMANDS["centerline"]) is True

    def test_reversed_requires_all_negative(self):
        assert label_adherence(snapshot_from([-1, -1, -0.5, -2], [0, 0, 0, 0]), COMMANDS["reversed"])
        assert not label_adherence(snapshot_from([-1, 0.1, -1, -1], [0, 0, 0, 0]), COMMANDS["reversed"])

    def test_racingline_band(self):
        assert label_adherence(snapshot_from([1] * 4, [0.29, -0.3, 0.1, 0.0]), COMMANDS["racingline"])
        assert not label_adherence(snapshot_from([1] * 4, [0.31, 0.0, 0.0, 0.0]), COMMANDS["racingline"])

    def test_oscillation_needs_zero_crossing_and_swing(self):
        # one-sided wiggle: no crossing
        assert not label_adherence(snapshot_from([1] * 4, [0.2, 0.7, 0.3, 0.8]), COMMANDS["oscillating"])
        # crossing but small swing
        assert not label_adherence(snapshot_from([1] * 4, [-0.2, 0.2, -0.25, 0.2]), COMMANDS["oscillating"])

    def test_speed_threshold_from_prompt(self):
        fast = snapshot_from([3.2, 3.4, 3.1, 3.3], [0, 0, 0, 0])
        assert label_adherence(fast, COMMANDS["speed"]) is True

    def test_predicates_pure(self):
        snapshot = oscillating_snapshot()
        for command in COMMAND_SUITE:
            assert label_adherence(snapshot, command) == label_adherence(snapshot, command)


class TestDataset:
    def test_same_seed_identical_files(self, oval, tmp_path):
        a = gen_state_dataset(oval, n=24, seed=7)
        b = gen_state_dataset(oval, n=24, seed=7)
        pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        dataset_to_jsonl(a, pa)
        dataset_to_jsonl(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_different_seed_differs(self, oval):
        a = gen_state_dataset(oval, n=8, seed=1)
        b = gen_state_dataset(oval, n=8, seed=2)
        assert any(
            x.snapshot.samples[0].s != y.snapshot.samples[0].s for x, y in zip(a, b)
        )

    def test_labels_match_recomputation(self, oval):
        dataset = gen_state_dataset(oval, n=16, seed=3)
        for item in dataset:
            for command in COMMAND_SUITE:
                assert item.labels[command.id] == label_adherence(item.snapshot, command)

    def test_pair_count(self, oval):
        dataset = gen_state_dataset(oval, n=10, seed=0)
        assert len(dataset) * len(COMMAND_SUITE) == 80


class TestAccuracy:
    def test_oracle_pipeline_is_exact(self, oval):
        dataset = gen_state_dataset(oval, n=24, seed=5)
        report = eval_decision_accuracy(dataset, oracle=True)
        assert report.average == 100.0
        assert report.n_pairs == 24 * 8
        assert all(value == 100.0 for value in report.per_category.values())
        assert report.parse_failures == 0

    def test_always_continue_matches_base_rate(self, oval):
        dataset = gen_state_dataset(oval, n=24, seed=5)
        gateway = ScriptedBackend(default_response="a) Continue behavior")
        report = eval_decision_accuracy(dataset, gateway=gateway, model_tag="always-continue")
        # independent recomputation of the adherent-label base rate
        adherent = sum(1 for item in dataset for command in COMMAND_SUITE if item.labels[command.id])
        expected = 100.0 * adherent / (len(dataset) * len(COMMAND_SUITE))
        assert report.average == pytest.approx(expected, abs=1e-9)

    def test_parse_failures_count_as_incorrect(self, oval):
        dataset = gen_state_dataset(oval, n=6, seed=5)
        gateway = ScriptedBackend(default_response="gibberish with no marker")
        report = eval_decision_accuracy(dataset, gateway=gateway)
        assert report.average == 0.0
        assert report.parse_failures == 6 * 8

    def test_report_layout(self, oval):
        dataset = gen_state_dataset(oval, n=8, seed=1)
        report = eval_decision_accuracy(dataset, oracle=True)
        text = report.to_text()
        assert "Model" in text and "RAG" in text and "Avg" in text
        data = json.loads(report.to_json())
        assert data["pairs"] == 64
        assert set(data["per_category"]) == set(report.per_category)


class TestRmse:
    def test_constant_equals_ref(self):
        assert rmse([1.25, 1.25, 1.25], 1.25) == 0.0

    def test_two_point(self):
        assert rmse([1.0, 3.0], 0.0) == pytest.approx(math.sqrt(5.0))

    def test_random_vs_independent(self):
        rng = np.random.default_rng(4)
        series = rng.normal(size=500)
        ref = 0.37
        oracle = math.sqrt(math.fsum((x - ref) ** 2 for x in series) / len(series))
        assert rmse(series, ref) == pytest.approx(oracle, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rmse([], 0.0)


class TestScenarios:
    def test_scenario_registry(self):
        assert [scenario.id for scenario in CONTROL_SCENARIOS] == [
            "centerline", "ref_velocity", "reversing", "smooth",
        ]
        assert scenario_by_id("reversing").reference == -1.0
        assert scenario_by_id("ref_velocity").reference == 1.25
        with pytest.raises(ValueError):
            scenario_by_id("nope")

    def test_identity_adaptation_zero_improvement(self, oval):
        # a gateway that changes nothing: adapted run identical to baseline
        scenario = scenario_by_id("ref_velocity")
        gateway = ScriptedBackend(default_response="new_mpc_params = {}")
        short = ScenarioResult  # noqa: F841 - clarity only
        result = run_control_scenario(scenario, oval, gateway=gateway, duration=8.0)
        assert result.completed
        assert result.improvement_pct == pytest.approx(0.0, abs=1e-12)

    def test_improvement_sign_flips_under_swap(self):
        baseline, adapted = 2.0, 0.5
        forward = (baseline - adapted) / baseline * 100.0
        backward = (adapted - baseline) / adapted * 100.0
        assert forward > 0 > backward

    def test_reversing_rmse_bounded_by_max_deviation(self, oval):
        # RMSE about the reference can never exceed the worst instantaneous
        # deviation over the same window
        from langdrive.evaluation import _closed_loop_run
        from langdrive.mpc import HorizonConfig
        from langdrive.params import ParamStore

        store = ParamStore()
        store.apply({"v_min": -1.0, "v_max": -1.0, "a_min": -20.0, "a_max": 0.0,
                     "qv": 0.1, "qn": 40.0, "qalpha": 50.0}, source="cli")
        from langdrive.sim import FrenetPose, VehicleState

        sim = _closed_loop_run(
            oval, store, 12.0, HorizonConfig(),
            VehicleState(pose=FrenetPose(s=0.0, n=0.0), v=1.0),
        )
        t = sim.log.column("t")
        v = sim.log.column("v")[t >= 5.0]
        error = rmse(v, -1.0)
        assert error <= float(np.max(np.abs(v + 1.0))) + 1e-12

    def test_nc_rendering_and_average(self):
        results = [
            ScenarioResult("reversing", "E_R", 4.0, 1.0, 75.0, True),
            ScenarioResult("smooth", "E_S", None, None, None, False),
        ]
        report = ControlReport(results)
        assert report.average_improvement == pytest.approx(75.0)
        assert "N.C." in report.to_text()


class TestFinetuneEmission:
    def test_counts_and_determinism(self, oval, tmp_path):
        a = gen_finetune_dataset("mpc", oval, tmp_path / "a.jsonl", n=12, seed=3)
        b = gen_finetune_dataset("mpc", oval, tmp_path / "b.jsonl", n=12, seed=3)
        assert a.lines == 12 and a.skipped == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_decision_kind_prompt_shape(self, oval, tmp_path):
        report = gen_finetune_dataset("decision", oval, tmp_path / "d.jsonl", n=4, seed=1)
        assert report.lines == 4
        lines = (tmp_path / "d.jsonl").read_text().splitlines()
        pair = json.loads(lines[0])
        assert set(pair) == {"prompt", "response"}
        assert "The data has been sampled" in pair["prompt"]

    def test_mpc_kind_prompt_shape(self, oval, tmp_path):
        gen_finetune_dataset("mpc", oval, tmp_path / "m.jsonl", n=3, seed=1)
        pair = json.loads((tmp_path / "m.jsonl").read_text().splitlines()[0])
        assert "Adapt the tuneable parameters" in pair["prompt"]
        assert "new_mpc_params" in pair["response"]

    def test_gateway_failures_skipped_and_counted(self, oval, tmp_path):
        class Flaky:
            def __init__(self):
                self.calls = 0

            def complete(self, request):
                self.calls += 1
                if self.calls % 3 == 0:
                    raise RuntimeError("boom")
                from langdrive.gateway import GenerationStats

                return "new_mpc_params = {}", GenerationStats(3, 0.01)

        report = gen_finetune_dataset("mpc", oval, tmp_path / "f.jsonl", n=9, seed=0, gateway=Flaky())
        assert report.skipped == 3
        assert report.lines == 6

    def test_unknown_kind_rejected(self, oval, tmp_path):
        with pytest.raises(ValueError):
            gen_finetune_dataset("bogus", oval, tmp_path / "x.jsonl", n=1)
