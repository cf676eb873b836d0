"""Evaluation harness: adherence labeling, labeled state datasets, decision
accuracy, closed-loop control-adaptability scenarios, and fine-tune dataset
emission."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapter import MpcAdapter, base_memory, build_adapter_prompt
from .decision import DecisionConfig, DecisionEngine, DecisionParseError, build_decision_prompt
from .gateway import ChatRequest
from .mpc import HorizonConfig, MpcController
from .params import PARAM_SCHEMA, ParamSpec, ParamStore
from .rag import KIND_MPC, MemoryStore, bundled_store
from .sim import SIM_DT, ControlInput, Simulator, SingularityError, StateSnapshot, VehicleState
from .standins import scripted_adapter_backend
from .track import FrenetPose, TrackSpec, curvature_at, halfwidths_at

CATEGORIES = (
    "Centerline", "CloseWall", "Forward", "Oscillating",
    "Racingline", "Reversed", "Speed", "Stop",
)


@dataclass(frozen=True)
class CommandSpec:
    id: str
    prompt: str
    category: str
    threshold: float | None = None


COMMAND_SUITE: tuple[CommandSpec, ...] = (
    CommandSpec("centerline", "Drive centered between the walls!", "Centerline"),
    CommandSpec("close_wall", "Drive close to a wall!", "CloseWall"),
    CommandSpec("forward", "Drive forwards!", "Forward"),
    CommandSpec("oscillating", "Oscillate around the racing line!", "Oscillating"),
    CommandSpec("racingline", "Normal driving on the racing line.", "Racingline"),
    CommandSpec("reversed", "Reverse the car!", "Reversed"),
    CommandSpec("speed", "Drive faster than 3 m/s!", "Speed", threshold=3.0),
    CommandSpec("stop", "Stop the car!", "Stop"),
)


def label_adherence(snapshot: StateSnapshot, command: CommandSpec) -> bool:
    """Programmatic ground truth per command category."""
    s_speed = np.array([sample.s_speed for sample in snapshot.samples])
    d = np.array([sample.d for sample in snapshot.samples])
    dist = np.array(
        [[sample.dist_left, sample.dist_right] for sample in snapshot.samples]
    )
    category = command.category
    if category == "Reversed":
        return bool(np.all(s_speed < 0))
    if category == "Forward":
        return bool(np.all(s_speed > 0))
    if category == "Stop":
        return bool(np.max(np.abs(s_speed)) < 0.1)
    if category == "Speed":
        threshold = command.threshold if command.threshold is not None else 3.0
        return bool(np.mean(s_speed) > threshold)
    if category == "Racingline":
        return bool(np.max(np.abs(d)) <= 0.3)
    if category == "Oscillating":
        return bool(d.max() > 0 > d.min() and (d.max() - d.min()) > 0.6)
    if category == "CloseWall":
        return bool(dist.min() < 0.4)
    if category == "Centerline":
        return bool(dist.min() >= 0.4 and np.max(np.abs(d)) <= 0.3)
    raise ValueError(f"unknown category {category!r}")


@dataclass(frozen=True)
class LabeledState:
    snapshot: StateSnapshot
    labels: dict[str, bool]
    archetype: str


ARCHETYPES = (
    "cruise_center", "slow_cruise", "stopped", "reversing",
    "oscillating", "weak_oscillating", "wall_hugger", "off_line",
)


def _feedforward_delta(track: TrackSpec, s: float, wheelbase: float = 0.33) -> float:
    return math.atan(wheelbase * float(curvature_at(track, s)))


def _behavior_rollout(track: TrackSpec, rng: np.random.Generator, archetype: str,
                      duration: float = 2.6, samples: int = 5) -> StateSnapshot:
    """Roll the kinematic model under a simple tracking law shaped by the
    archetype, then sample the trailing window."""
    s0 = float(rng.uniform(0, track.total_length))
    v_target = 0.0
    amp = 0.0
    period = 1.0
    phase = float(rng.uniform(0, 2 * math.pi))
    offset = 0.0
    if archetype == "cruise_center":
        v_target = float(rng.uniform(4.5, 6.5))
    elif archetype == "slow_cruise":
        v_target = float(rng.uniform(0.8, 2.5))
    elif archetype == "stopped":
        v_target = 0.0
    elif archetype == "reversing":
        v_target = float(rng.uniform(-2.0, -0.8))
    elif archetype == "oscillating":
        v_target = float(rng.uniform(2.5, 4.0))
        amp = float(rng.uniform(0.45, 0.7))
        period = float(rng.uniform(2.0, 3.0))
    elif archetype == "weak_oscillating":
        v_target = float(rng.uniform(2.0, 4.0))
        amp = float(rng.uniform(0.05, 0.22))
        period = float(rng.uniform(2.0, 3.0))
    elif archetype == "wall_hugger":
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        gap = float(rng.uniform(0.12, 0.34))
        offset = side * (1.3 - gap) if side > 0 else -(1.3 - gap)
        v_target = float(rng.uniform(1.5, 3.5))
    elif archetype == "off_line":
        offset = float(rng.choice([-1.0, 1.0])) * float(rng.uniform(0.35, 0.75))
        v_target = float(rng.uniform(1.5, 4.0))
    else:
        raise ValueError(f"unknown archetype {archetype!r}")

    omega = 2 * math.pi / period

    def n_target(t: float) -> tuple[float, float]:
        if amp > 0:
            return offset + amp * math.sin(omega * t + phase), amp * omega * math.cos(omega * t + phase)
        return offset, 0.0

    n_init, dn_init = n_target(0.0)
    phi_init = 0.0
    if abs(v_target) > 0.3:
        phi_init = math.asin(max(-0.8, min(0.8, dn_init / v_target)))
    state = VehicleState(
        pose=FrenetPose(s=s0, n=n_init, delta_phi=phi_init),
        delta=_feedforward_delta(track, s0),
        v=v_target,
    )
    sim = Simulator(track, state)
    steps = int(duration / SIM_DT)
    for k in range(steps):
        t = k * SIM_DT
        current = sim.state
        if abs(v_target) > 0.3:
            target_n, target_dn = n_target(t)
            dn_des = 1.8 * (target_n - current.pose.n) + target_dn
            ratio = max(-0.85, min(0.85, dn_des / v_target))
            phi_des = math.asin(ratio)
            ff = _feedforward_delta(track, current.pose.s)
            delta_des = ff + max(-0.35, min(0.35, 1.4 * (phi_des - current.pose.delta_phi)))
            d_delta = max(-0.08, min(0.08, delta_des - current.delta))
        else:
            d_delta = 0.0
        accel = max(-5.0, min(5.0, 3.0 * (v_target - current.v)))
        sim.advance(ControlInput(d_delta=d_delta, a=accel))
    return sim.snapshot(2.0, samples)


def gen_state_dataset(track: TrackSpec, n: int = 200, seed: int = 0,
                      commands: tuple[CommandSpec, ...] = COMMAND_SUITE) -> list[LabeledState]:
    """Deterministic labeled dataset of sampled state windows."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    dataset: list[LabeledState] = []
    for i in range(n):
        archetype = ARCHETYPES[i % len(ARCHETYPES)]
        snapshot = _behavior_rollout(track, rng, archetype)
        labels = {command.id: label_adherence(snapshot, command) for command in commands}
        dataset.append(LabeledState(snapshot=snapshot, labels=labels, archetype=archetype))
    return dataset


def dataset_to_jsonl(dataset: list[LabeledState], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item in dataset:
            handle.write(json.dumps({
                "archetype": item.archetype,
                "labels": item.labels,
                "snapshot": {
                    "duration": item.snapshot.duration,
                    "crashed": item.snapshot.crashed,
                    "samples": [vars(sample) for sample in item.snapshot.samples],
                },
            }, sort_keys=True) + "\n")


class _LabelFedBackend:
    """Oracle stand-in: answers straight from the queued ground-truth labels."""

    name = "oracle"

    def __init__(self):
        self.queue: deque[bool] = deque()

    def push(self, adherent: bool) -> None:
        self.queue.append(adherent)

    def complete(self, request: ChatRequest):
        from .gateway import GenerationStats, count_tokens

        adherent = self.queue.popleft()
        text = "a) Continue behavior" if adherent else "b) Change behavior: correct the driving."
        return text, GenerationStats(output_tokens=count_tokens(text), wall_latency=0.0)


@dataclass
class AccuracyReport:
    model_tag: str
    rag_enabled: bool
    per_category: dict[str, float]
    average: float
    n_pairs: int
    parse_failures: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "model": self.model_tag,
            "rag": self.rag_enabled,
            "per_category": self.per_category,
            "average_accuracy_pct": self.average,
            "pairs": self.n_pairs,
            "parse_failures": self.parse_failures,
        }, indent=2)

    def to_text(self) -> str:
        header = f"{'Model':<14} {'RAG':<4} " + " ".join(f"{c:>11}" for c in CATEGORIES) + f" {'Avg':>7}"
        row = f"{self.model_tag:<14} {'yes' if self.rag_enabled else 'no':<4} "
        row += " ".join(f"{self.per_category[c]:>10.2f}%" for c in CATEGORIES)
        row += f" {self.average:>6.2f}%"
        return header + "\n" + row


def eval_decision_accuracy(dataset, gateway=None, oracle: bool = False,
                           store: MemoryStore | None = None, use_rag: bool = True,
                           model_tag: str = "scripted",
                           commands: tuple[CommandSpec, ...] = COMMAND_SUITE) -> AccuracyReport:
    """Run the decision pipeline over every (state, command) pair.

    With ``oracle=True`` the gateway is replaced by a stand-in that answers
    from the ground-truth labels, exercising the full prompt/parse pipeline
    end to end. Parse failures count as incorrect.
    """
    if oracle:
        gateway = _LabelFedBackend()
        model_tag = "oracle"
    if gateway is None:
        raise ValueError("need a gateway (or oracle=True)")
    store = store if store is not None else bundled_store()
    engine = DecisionEngine(gateway, store=store, config=DecisionConfig(use_rag=use_rag))

    correct = {category: 0 for category in CATEGORIES}
    totals = {category: 0 for category in CATEGORIES}
    parse_failures = 0
    for item in dataset:
        for command in commands:
            label = item.labels[command.id]
            if oracle:
                gateway.push(label)
            try:
                outcome = engine.decide_snapshot(command.prompt, item.snapshot)
                predicted = outcome.action.value == "continue"
            except DecisionParseError:
                parse_failures += 1
                predicted = None
            totals[command.category] += 1
            if predicted is not None and predicted == label:
                correct[command.category] += 1
    per_category = {
        category: 100.0 * correct[category] / totals[category] if totals[category] else 0.0
        for category in CATEGORIES
    }
    total_pairs = sum(totals.values())
    average = 100.0 * sum(correct.values()) / total_pairs if total_pairs else 0.0
    return AccuracyReport(
        model_tag=model_tag,
        rag_enabled=use_rag,
        per_category=per_category,
        average=average,
        n_pairs=total_pairs,
        parse_failures=parse_failures,
    )


def rmse(series, ref: float) -> float:
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise ValueError("rmse of an empty series")
    return float(np.sqrt(np.mean((values - ref) ** 2)))


@dataclass(frozen=True)
class ControlScenario:
    id: str
    instruction: str
    metric: str
    reference: float | None
    duration: float = 60.0
    settle: float = 5.0


CONTROL_SCENARIOS: tuple[ControlScenario, ...] = (
    ControlScenario("centerline", "Drive as far away from the walls as possible!", "E_C", None),
    ControlScenario("ref_velocity", "Follow the reference velocity of 1.25 m/s as closely as possible!", "E_V", 1.25),
    ControlScenario("reversing", "Drive the track in reverse at -1 m/s!", "E_R", -1.0),
    ControlScenario("smooth", "Reduce jerkyness!", "E_S", 0.0),
)


def scenario_by_id(scenario_id: str) -> ControlScenario:
    for scenario in CONTROL_SCENARIOS:
        if scenario.id == scenario_id:
            return scenario
    raise ValueError(f"unknown scenario {scenario_id!r}")


@dataclass
class ScenarioResult:
    scenario_id: str
    metric: str
    baseline_error: float | None
    adapted_error: float | None
    improvement_pct: float | None
    completed: bool
    applied_update: dict[str, float] = field(default_factory=dict)
    mean_adapted_v: float | None = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "metric": self.metric,
            "baseline_error": self.baseline_error,
            "adapted_error": self.adapted_error,
            "improvement_pct": self.improvement_pct,
            "completed": self.completed,
            "applied_update": self.applied_update,
            "mean_adapted_v": self.mean_adapted_v,
        }


@dataclass
class ControlReport:
    results: list[ScenarioResult]

    @property
    def average_improvement(self) -> float | None:
        done = [r.improvement_pct for r in self.results if r.completed and r.improvement_pct is not None]
        if not done:
            return None
        return float(np.mean(done))

    def to_json(self) -> str:
        return json.dumps({
            "scenarios": [result.to_dict() for result in self.results],
            "average_improvement_pct": self.average_improvement,
        }, indent=2)

    def to_text(self) -> str:
        lines = [f"{'Scenario':<14} {'Metric':<6} {'Baseline':>9} {'Adapted':>9} {'Improve':>9}"]
        for r in self.results:
            if not r.completed:
                lines.append(f"{r.scenario_id:<14} {r.metric:<6} {'N.C.':>9} {'N.C.':>9} {'N.C.':>9}")
                continue
            lines.append(
                f"{r.scenario_id:<14} {r.metric:<6} {r.baseline_error:>9.3f} "
                f"{r.adapted_error:>9.3f} {r.improvement_pct:>8.1f}%"
            )
        avg = self.average_improvement
        lines.append(f"average improvement: {avg:.1f}%" if avg is not None else "average improvement: n/a")
        return "\n".join(lines)


def _closed_loop_run(track: TrackSpec, store: ParamStore, duration: float,
                     horizon: HorizonConfig, initial: VehicleState):
    """Plain MPC-in-the-loop run; returns the simulator (with its log)."""
    sim = Simulator(track, initial)
    controller = MpcController(track, horizon)
    steps = int(duration / SIM_DT)
    for _ in range(steps):
        params = store.snapshot()
        solution = controller.step(sim.state, params)
        control = ControlInput(
            d_delta=solution.first_input.d_delta * SIM_DT / horizon.dt,
            a=solution.first_input.a,
        )
        sim.advance(control)
    return sim


def _scenario_metric(scenario: ControlScenario, sim, settle: float) -> float:
    t = sim.log.column("t")
    mask = t >= settle
    if scenario.metric == "E_C":
        return rmse(sim.log.column("n")[mask], 0.0)
    if scenario.metric in ("E_V", "E_R"):
        return rmse(sim.log.column("v")[mask], scenario.reference)
    if scenario.metric == "E_S":
        v = sim.log.column("v")
        accel = np.diff(v) / np.diff(t)
        return rmse(accel[mask[1:]], 0.0)
    raise ValueError(f"unknown metric {scenario.metric!r}")


def run_control_scenario(scenario: ControlScenario, track: TrackSpec, gateway=None,
                         seed: int = 0, horizon: HorizonConfig | None = None,
                         duration: float | None = None) -> ScenarioResult:
    """Baseline (default parameters) vs adapted closed-loop run."""
    gateway = gateway if gateway is not None else scripted_adapter_backend()
    horizon = horizon if horizon is not None else HorizonConfig()
    duration = duration if duration is not None else scenario.duration
    initial = VehicleState(pose=FrenetPose(s=0.0, n=0.0), v=1.0)

    def attempt(store: ParamStore):
        try:
            sim = _closed_loop_run(track, store, duration, horizon, initial)
        except SingularityError:
            return None, None
        if sim.crash.crashed:
            return None, sim
        return _scenario_metric(scenario, sim, scenario.settle), sim

    baseline_store = ParamStore()
    baseline_error, _ = attempt(baseline_store)

    adapted_store = ParamStore()
    adapter = MpcAdapter(gateway, adapted_store, store=bundled_store())
    update = adapter.adapt(scenario.instruction)
    adapted_error, adapted_sim = attempt(adapted_store)

    completed = baseline_error is not None and adapted_error is not None
    improvement = None
    if completed and baseline_error > 1e-12:
        improvement = (baseline_error - adapted_error) / baseline_error * 100.0
    mean_v = None
    if adapted_sim is not None and len(adapted_sim.log) > 1:
        t = adapted_sim.log.column("t")
        mean_v = float(np.mean(adapted_sim.log.column("v")[t >= scenario.settle]))
    return ScenarioResult(
        scenario_id=scenario.id,
        metric=scenario.metric,
        baseline_error=baseline_error,
        adapted_error=adapted_error,
        improvement_pct=improvement,
        completed=completed,
        applied_update=update.accepted,
        mean_adapted_v=mean_v,
    )


FINETUNE_DEFAULTS = {"decision": 626, "mpc": 150}

_HINT_TEMPLATES = (
    "If the d-speed is above than {dspeed:.1f}m/s is high.",
    "Unless specified differently by the human, the car is usually driving at speeds between {lo} and {hi}m/s.",
    "If the distance to a wall is smaller than {wall:.1f}m, the car is close to that wall.",
    "A d-coordinate above {line:.1f}m is considered not to be on the racing line.",
    "The car is oscillating if the d-coordinate oscillates between positive and negative values exceeding a magnitude of {line:.1f} metres.",
    "Oscillations in d-coordinate under {line:.1f}m or d-speed under {dspeed:.1f}m/s are negligible.",
)

_MPC_INSTRUCTIONS = (
    "Do not exceed speeds of {speed:.0f} km/h.",
    "Follow the reference velocity of {vref:.2f} m/s as closely as possible!",
    "Drive the track in reverse at -{vrev:.1f} m/s!",
    "Reduce jerkyness!",
    "Drive as far away from the walls as possible!",
    "Keep at least {margin:.1f} m away from the walls.",
    "Drive faster than {vfast:.0f} m/s!",
    "Stop the car!",
)


def _randomized_hints(rng: np.random.Generator) -> list[str]:
    dspeed = float(rng.uniform(0.3, 0.9))
    lo = int(rng.integers(2, 5))
    hi = lo + int(rng.integers(1, 4))
    wall = float(rng.uniform(0.2, 0.6))
    line = float(rng.uniform(0.2, 0.5))
    return [t.format(dspeed=dspeed, lo=lo, hi=hi, wall=wall, line=line) for t in _HINT_TEMPLATES]


def _randomized_schema(rng: np.random.Generator) -> tuple[ParamSpec, ...]:
    specs = []
    for spec in PARAM_SCHEMA:
        default = float(np.round(rng.uniform(spec.min, spec.max), 2))
        specs.append(ParamSpec(spec.name, spec.min, spec.max, default, spec.description))
    return tuple(specs)


@dataclass(frozen=True)
class EmissionReport:
    path: str
    lines: int
    skipped: int


def gen_finetune_dataset(kind: str, track: TrackSpec, out_path, n: int | None = None,
                         seed: int = 0, gateway=None) -> EmissionReport:
    """Emit prompt/response pairs as JSON lines for downstream fine-tuning.

    Prompts are built by the live engines over randomized states and
    numeric inputs; responses come from the configured gateway. Gateway
    failures skip the pair and are counted.
    """
    if kind not in FINETUNE_DEFAULTS:
        raise ValueError(f"kind must be one of {sorted(FINETUNE_DEFAULTS)}")
    n = n if n is not None else FINETUNE_DEFAULTS[kind]
    rng = np.random.default_rng(seed)
    if gateway is None:
        if kind == "mpc":
            gateway = scripted_adapter_backend()
        else:
            from .standins import scripted_decision_backend

            gateway = scripted_decision_backend()
    corpus = bundled_store()

    skipped = 0
    written = 0
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8") as handle:
        for i in range(n):
            if kind == "decision":
                archetype = ARCHETYPES[int(rng.integers(0, len(ARCHETYPES)))]
                snapshot = _behavior_rollout(track, rng, archetype)
                command = COMMAND_SUITE[int(rng.integers(0, len(COMMAND_SUITE)))]
                prompt = build_decision_prompt(command.prompt, snapshot, _randomized_hints(rng))
            else:
                template = _MPC_INSTRUCTIONS[int(rng.integers(0, len(_MPC_INSTRUCTIONS)))]
                instruction = template.format(
                    speed=float(rng.uniform(5, 40)),
                    vref=float(rng.uniform(0.5, 3.0)),
                    vrev=float(rng.uniform(0.5, 2.0)),
                    margin=float(rng.uniform(0.2, 0.9)),
                    vfast=float(rng.uniform(2, 7)),
                )
                memories = [entry.text for entry in corpus.retrieve(instruction, KIND_MPC, 3)]
                prompt = build_adapter_prompt(instruction, base_memory(_randomized_schema(rng)), memories)
            try:
                response, _stats = gateway.complete(ChatRequest(user_text=prompt))
            except Exception:  # noqa: BLE001 - skip-and-count contract
                skipped += 1
                continue
            handle.write(json.dumps({"prompt": prompt, "response": response}) + "\n")
            written += 1
    return EmissionReport(path=str(out_path), lines=written, skipped=skipped)
