"""Acceptance suite: one test per release criterion, each at its stated
tolerance, printing a pass line on success. Run with ``pytest -s`` to see
the lines as they complete."""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from langdrive.adapter import parse_params, validate_and_clamp
from langdrive.boxqp import BoxQp, solve_box_qp
from langdrive.decision import DecisionAction, parse_decision
from langdrive.evaluation import (
    COMMAND_SUITE,
    eval_decision_accuracy,
    gen_finetune_dataset,
    gen_state_dataset,
    run_control_scenario,
    scenario_by_id,
)
from langdrive.gateway import GenerationStats, ScriptedBackend, stats_summary
from langdrive.mpc import HorizonConfig, MpcController, corridor_violation
from langdrive.orchestrator import Orchestrator, RunConfig
from langdrive.params import PARAM_SCHEMA, MpcParams, ParamStore
from langdrive.sim import (
    SIM_DT,
    ControlInput,
    FrenetPose,
    Simulator,
    SingularityError,
    VehicleState,
    step,
)
from langdrive.track import (
    cartesian_to_frenet,
    curvature_at,
    frenet_to_cartesian,
    halfwidths_at,
)

from conftest import circle_track, straight_track
from test_sim import fine_midpoint

FIXTURES = Path(__file__).parent / "fixtures"


def _report(name: str) -> None:
    print(f"[acceptance] PASS {name}")


class TestAcceptance:
    def test_geometry_round_trips_and_curvature(self, oval):
        started = time.perf_counter()
        rng = np.random.default_rng(123)
        worst = 0.0
        for _ in range(1000):
            s = rng.uniform(0, oval.total_length)
            kappa = abs(float(curvature_at(oval, s)))
            wl, wr = halfwidths_at(oval, s)
            n_max = min(float(wl), float(wr), (0.9 / kappa) if kappa > 0 else 10.0)
            pose = FrenetPose(s=s, n=rng.uniform(-n_max, n_max), delta_phi=rng.uniform(-1.5, 1.5))
            x, y, heading = frenet_to_cartesian(oval, pose)
            back = cartesian_to_frenet(oval, x, y, heading)
            x2, y2, _ = frenet_to_cartesian(oval, back)
            worst = max(worst, math.hypot(x2 - x, y2 - y))
        assert worst <= 1e-6

        circle = circle_track(radius=2.0)
        for s in np.linspace(0, circle.total_length, 101):
            assert float(curvature_at(circle, s)) == pytest.approx(0.5, abs=1e-3)
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0
        _report(f"geometry: 1000 round-trips worst {worst:.2e} m, circle curvature within 1e-3, {elapsed:.1f}s")

    def test_dynamics_rk4_vs_substepped_oracle(self):
        circle = circle_track(radius=2.0)
        straight = straight_track()
        rng = np.random.default_rng(321)
        worst = 0.0
        for i in range(200):
            track = circle if i % 2 else straight
            state = VehicleState(
                pose=FrenetPose(
                    s=rng.uniform(0, track.total_length * 0.9),
                    n=rng.uniform(-0.4, 0.4),
                    delta_phi=rng.uniform(-0.5, 0.5),
                ),
                delta=rng.uniform(-0.3, 0.3),
                v=rng.uniform(0.2, 3.0),
            )
            control = ControlInput(d_delta=rng.uniform(-0.05, 0.05), a=rng.uniform(-3, 3))
            out = step(state, control, SIM_DT, track)
            s, n, phi, v = fine_midpoint(track, state, control, SIM_DT, substeps=1000)
            worst = max(
                worst,
                abs(out.pose.s - s), abs(out.pose.n - n),
                abs(out.pose.delta_phi - phi), abs(out.v - v),
            )
        assert worst <= 1e-6

        wide = circle_track(radius=2.0, width=3.0)
        with pytest.raises(SingularityError):
            step(VehicleState(pose=FrenetPose(s=0.0, n=2.0), v=1.0), ControlInput(), SIM_DT, wide)
        _report(f"dynamics: 200 RK4 steps within {worst:.2e} of 1000x sub-stepped oracle; singularity raises")

    def test_qp_solver_grid_oracle(self):
        started = time.perf_counter()
        rng = np.random.default_rng(2024)
        for _ in range(500):
            angle = rng.uniform(0, np.pi)
            q = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
            H = q @ np.diag(rng.uniform(1.0, 2.0, size=2)) @ q.T
            g = rng.normal(scale=2.0, size=2)
            lb = rng.uniform(-1.0, -0.1, size=2)
            ub = rng.uniform(0.1, 1.0, size=2)
            qp = BoxQp(H, g, lb, ub)
            result = solve_box_qp(qp, tol=1e-9)

            xs = np.arange(lb[0], ub[0] + 5e-4, 1e-3)
            ys = np.arange(lb[1], ub[1] + 5e-4, 1e-3)
            F = (
                0.5 * (H[0, 0] * xs[:, None] ** 2 + 2 * H[0, 1] * xs[:, None] * ys[None, :]
                       + H[1, 1] * ys[None, :] ** 2)
                + g[0] * xs[:, None] + g[1] * ys[None, :]
            )
            i, j = np.unravel_index(np.argmin(F), F.shape)
            assert np.all(np.abs(result.x - (xs[i], ys[j])) <= 1e-3 + 1e-6)
            if result.status == "optimal":
                assert result.kkt_residual <= 1e-6
            trace = result.objective_trace
            assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0
        _report(f"qp solver: 500 grid-oracle cases, KKT <= 1e-6, monotone, {elapsed:.1f}s")

    def test_mpc_safety_randomized_params(self, oval):
        rng = np.random.default_rng(77)
        sim = Simulator(oval, VehicleState(pose=FrenetPose(s=0.0, n=0.0), v=1.0))
        controller = MpcController(oval)
        params = MpcParams.defaults()
        excursions = 0
        slack_seen = 0

        def random_params():
            draw = {}
            for spec in PARAM_SCHEMA:
                draw[spec.name] = float(rng.uniform(spec.min, spec.max))
            if draw["v_min"] > draw["v_max"]:
                draw["v_min"] = draw["v_max"]
            if draw["a_min"] > draw["a_max"]:
                draw["a_min"] = draw["a_max"]
            return MpcParams(**draw)

        ticks = 10_000
        for i in range(ticks):
            if i % 250 == 0:
                params = random_params()
                controller.reset()
            state = sim.state
            solution = controller.step(state, params)
            assert solution.status != "infeasible_params"
            assert params.v_min - 1e-6 <= solution.v_command <= params.v_max + 1e-6
            assert params.a_min - 1e-6 <= solution.first_input.a <= params.a_max + 1e-6
            violation = corridor_violation(oval, params, state.pose.s, state.pose.n)
            if violation > 0.0:
                excursions += 1
                assert solution.slack_max > 0.0
            if solution.slack_max > 0.0:
                slack_seen += 1
            sim.advance(ControlInput(
                d_delta=solution.first_input.d_delta * SIM_DT / controller.horizon.dt,
                a=solution.first_input.a,
            ))
        assert excursions > 0  # the random draws do stress the boundary
        _report(f"mpc safety: 10k ticks, commands in bounds, {excursions} excursions all flagged "
                f"({slack_seen} ticks with slack)")

    def test_pinched_bound_reversing(self, oval):
        started = time.perf_counter()
        result = run_control_scenario(scenario_by_id("reversing"), oval)
        elapsed = time.perf_counter() - started
        assert result.completed
        assert -1.15 <= result.mean_adapted_v <= -0.85
        assert result.improvement_pct >= 50.0
        assert elapsed < 60.0
        _report(f"reversing: mean v {result.mean_adapted_v:.3f}, improvement "
                f"{result.improvement_pct:.1f}%, {elapsed:.1f}s")

    def test_smoothness_scenario(self, oval):
        result = run_control_scenario(scenario_by_id("smooth"), oval)
        assert result.completed
        assert result.applied_update["qac"] == 1.0      # schema maximum
        assert result.applied_update["qddelta"] == 100.0  # schema maximum
        assert result.adapted_error < result.baseline_error
        _report(f"smoothness: E_S {result.baseline_error:.4f} -> {result.adapted_error:.4f} "
                f"({result.improvement_pct:.1f}%)")

    def test_parser_goldens(self):
        change = parse_decision((FIXTURES / "responses" / "change_speed_up.txt").read_text())
        assert change.action is DecisionAction.CHANGE
        assert change.instruction == (
            "The car should increase its s-speed to a normal range of 5-7 m/s, "
            "reduce the oscillation in d-coordinate, and move closer to the centerline to increase safety."
        )
        cont = parse_decision((FIXTURES / "responses" / "continue_reversing.txt").read_text())
        assert cont.action is DecisionAction.CONTINUE

        raw = parse_params((FIXTURES / "responses" / "params_reverse.txt").read_text())
        assert raw == {
            "qv": 0.1, "qn": 40.0, "qalpha": 50.0, "ddelta_min": -5.0, "ddelta_max": 0.0,
            "dv_min": -50.0, "dv_max": -1.0, "v_min": -1.0, "v_max": -1.0,
            "boundary_inflation": 0.1,
        }
        update = validate_and_clamp(raw)
        assert update.accepted == {
            "qv": 0.1, "qn": 40.0, "qalpha": 50.0, "a_min": -20.0, "a_max": 0.0,
            "v_min": -1.0, "v_max": -1.0, "track_safety_margin": 0.1,
        }
        _report("parser goldens: change/continue fixtures and the 10-key raw + canonical maps")

    def test_clamping_fuzz(self):
        rng = np.random.default_rng(55)
        names = [spec.name for spec in PARAM_SCHEMA] + [
            "boundary_inflation", "dv_min", "dv_max", "ddelta_min", "ddelta_max",
            "junk", "qn ", "weird-key",
        ]
        store = ParamStore()
        for _ in range(10_000):
            size = int(rng.integers(0, 8))
            raw = {
                str(rng.choice(names)): float(rng.normal(scale=50.0))
                for _ in range(size)
            }
            update = validate_and_clamp(raw)
            applied = store.apply(update.accepted, source="adapter", warnings=update.warnings)
            assert applied.v_min <= applied.v_max
            assert applied.a_min <= applied.a_max
            for spec in PARAM_SCHEMA:
                value = getattr(applied, spec.name)
                assert spec.min <= value <= spec.max
        _report("clamping fuzz: 10k random raw maps, store invariants always hold")

    def test_decision_pipeline_identity(self, oval):
        started = time.perf_counter()
        dataset = gen_state_dataset(oval, n=200, seed=0)
        assert len(dataset) * len(COMMAND_SUITE) == 1600
        for command in COMMAND_SUITE:
            positives = sum(1 for item in dataset if item.labels[command.id])
            assert positives >= 10, command.category
            assert len(dataset) - positives >= 10, command.category

        oracle_report = eval_decision_accuracy(dataset, oracle=True)
        assert oracle_report.average == 100.0
        assert oracle_report.n_pairs == 1600

        gateway = ScriptedBackend(default_response="a) Continue behavior")
        continue_report = eval_decision_accuracy(dataset, gateway=gateway, model_tag="always-continue")
        adherent = sum(1 for item in dataset for command in COMMAND_SUITE if item.labels[command.id])
        base_rate = 100.0 * adherent / 1600
        assert continue_report.average == pytest.approx(base_rate, abs=1e-9)
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0
        _report(f"decision pipeline: oracle exactly 100% on 1600 pairs, always-continue == "
                f"base rate {base_rate:.2f}%, {elapsed:.1f}s")

    def test_crash_recovery_end_to_end(self):
        config = RunConfig(
            duration=30.0,
            backend={"kind": "replay", "transcript": str(FIXTURES / "crash_recovery_transcript.jsonl")},
            prompts=[{"t": 0.0, "text": "Drive normally!"}],
            initial={"s": 2.0, "n": -1.3, "delta_phi": -0.6, "v": 0.0},
            crashed_start=True,
        )
        orchestrator = Orchestrator(config)
        orchestrator.run()
        v = orchestrator.sim.log.column("v")
        t = orchestrator.sim.log.column("t")
        crashed = orchestrator.sim.log.column("crashed")
        assert crashed[0] == 1.0
        assert bool(np.any((v > -1.15) & (v < -0.85)))
        resumed = np.where(v >= 1.4)[0]
        assert len(resumed) > 0 and t[resumed[0]] <= 30.0
        cleared = np.where(crashed < 0.5)[0]
        assert len(cleared) > 0
        assert crashed[-1] == 0.0
        _report(f"crash recovery: reversed, crash cleared at t={t[cleared[0]]:.2f}s, "
                f"resumed v>=1.4 at t={t[resumed[0]]:.2f}s")

    def test_dataset_emission(self, oval, tmp_path):
        decision_a = gen_finetune_dataset("decision", oval, tmp_path / "da.jsonl", seed=0)
        assert decision_a.lines == 626
        mpc_a = gen_finetune_dataset("mpc", oval, tmp_path / "ma.jsonl", seed=0)
        assert mpc_a.lines == 150
        gen_finetune_dataset("decision", oval, tmp_path / "db.jsonl", seed=0)
        gen_finetune_dataset("mpc", oval, tmp_path / "mb.jsonl", seed=0)
        assert (tmp_path / "da.jsonl").read_bytes() == (tmp_path / "db.jsonl").read_bytes()
        assert (tmp_path / "ma.jsonl").read_bytes() == (tmp_path / "mb.jsonl").read_bytes()
        _report("dataset emission: 626 and 150 lines, byte-identical under a fixed seed")

    def test_generation_stats(self):
        rng = np.random.default_rng(60)
        latencies = rng.uniform(0.02, 3.0, size=60)
        tokens = rng.integers(1, 400, size=60)
        runs = [GenerationStats(int(k), float(l)) for k, l in zip(tokens, latencies)]
        summary = stats_summary(runs)
        mean = math.fsum(latencies) / 60
        std = math.sqrt(math.fsum((l - mean) ** 2 for l in latencies) / 60)
        assert summary.latency_mean == pytest.approx(mean, abs=1e-9)
        assert summary.latency_std == pytest.approx(std, abs=1e-9)

        backend = ScriptedBackend(default_response="four words per response", fixed_latency=0.1)
        from langdrive.gateway import ChatRequest

        protocol = []
        for _ in range(60):
            _, stats = backend.complete(ChatRequest(user_text="same input prompt"))
            protocol.append(stats)
        protocol_summary = stats_summary(protocol)
        assert protocol_summary.latency_mean == pytest.approx(0.1, abs=1e-12)
        assert protocol_summary.latency_std == 0.0
        _report("stats: mu/sigma match the independent recomputation to 1e-9; 60-call protocol")
