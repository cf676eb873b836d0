"""Closed-loop wiring: fixed-tick sim loop, decision/adaptation cycles that
never block the controller, run artifacts, and telemetry frames."""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .adapter import MpcAdapter
from .decision import DecisionConfig, DecisionEngine
from .gateway import backend_from_config
from .mpc import HorizonConfig, MpcController
from .params import MpcParams, ParamStore
from .rag import bundled_store
from .sim import SIM_DT, ControlInput, Simulator, VehicleState
from .standins import scripted_adapter_backend, scripted_decision_backend
from .track import FrenetPose, TrackSpec, frenet_to_cartesian, load_track, wall_distances


def bundled_track_path() -> Path:
    return Path(str(resources.files("langdrive").joinpath("data/tracks/oval.csv")))


@dataclass
class RunConfig:
    track_path: str | None = None
    horizon: HorizonConfig = field(default_factory=HorizonConfig)
    backend: dict = field(default_factory=lambda: {"kind": "scripted"})
    decision: DecisionConfig = field(default_factory=DecisionConfig)
    cadence_s: float = 2.0
    seed: int = 0
    duration: float = 20.0
    out_dir: str | None = None
    prompts: list[dict] = field(default_factory=list)  # [{"t": 0.0, "text": "..."}]
    initial: dict = field(default_factory=dict)
    crashed_start: bool = False
    sync_cycles: bool = True
    serve_host: str = "127.0.0.1"
    serve_port: int = 8700

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.update(overrides)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        kwargs = dict(data)
        if "horizon" in kwargs and isinstance(kwargs["horizon"], dict):
            kwargs["horizon"] = HorizonConfig(**kwargs["horizon"])
        if "decision" in kwargs and isinstance(kwargs["decision"], dict):
            kwargs["decision"] = DecisionConfig(**kwargs["decision"])
        return cls(**kwargs)


@dataclass(frozen=True)
class TelemetryFrame:
    t: float
    s: float
    n: float
    delta_phi: float
    v: float
    delta: float
    d_left: float
    d_right: float
    crashed: bool
    x: float
    y: float
    heading: float
    params_hash: str
    last_decision: str | None
    last_update: dict | None

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class RunArtifacts:
    state_log_path: str | None
    journal_path: str | None
    decision_log_path: str | None
    decisions: list[dict]
    journal: list[dict]
    final_params: dict
    duration: float
    crashed: bool


def params_hash(params: MpcParams) -> str:
    payload = json.dumps(params.as_dict(), sort_keys=True)
    return hashlib.md5(payload.encode()).hexdigest()[:10]


def build_backends(config: dict):
    """One configured backend kind serves both stages. The scripted kind
    gets stage-specific rules and defaults; replay shares one transcript
    cursor across both stages (turns interleave in call order); remote
    shares the endpoint."""
    kind = config.get("kind", "scripted")
    if kind == "scripted":
        decision = scripted_decision_backend()
        adapter = scripted_adapter_backend()
        extra = config.get("rules", [])
        if extra:
            from .gateway import ScriptedRule

            rules = [ScriptedRule(r["matcher"], r["response"], r.get("is_pattern", False)) for r in extra]
            decision.rules = tuple(rules) + decision.rules
            adapter.rules = tuple(rules) + adapter.rules
        return decision, adapter
    shared = backend_from_config(config)
    return shared, shared


class Orchestrator:
    """Owns the sim loop. Decision cycles read immutable snapshots and write
    only through the param store's atomic apply; at most one cycle is in
    flight, and the loop itself never waits on a model call unless headless
    synchronous mode is requested."""

    def __init__(self, config: RunConfig, track: TrackSpec | None = None):
        self.config = config
        self.track = track if track is not None else load_track(config.track_path or bundled_track_path())
        init = config.initial
        state = VehicleState(
            pose=FrenetPose(
                s=float(init.get("s", 0.0)),
                n=float(init.get("n", 0.0)),
                delta_phi=float(init.get("delta_phi", 0.0)),
            ),
            delta=float(init.get("delta", 0.0)),
            v=float(init.get("v", 1.0)),
        )
        self.sim = Simulator(self.track, state, crashed=config.crashed_start)
        self.controller = MpcController(self.track, config.horizon)

        out_dir = Path(config.out_dir) if config.out_dir else None
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)
        self._out_dir = out_dir
        journal_path = out_dir / "params_journal.jsonl" if out_dir else None
        decision_log_path = out_dir / "decisions.jsonl" if out_dir else None
        self.store = ParamStore(journal_path=journal_path, clock=lambda: self.sim.state.t)

        decision_gateway, adapter_gateway = build_backends(config.backend)
        corpus = bundled_store()
        self.adapter = MpcAdapter(adapter_gateway, self.store, store=corpus)
        self.engine = DecisionEngine(
            decision_gateway, store=corpus, config=config.decision,
            log_path=decision_log_path, clock=lambda: self.sim.state.t,
        )

        self.active_prompt: str | None = None
        self._pending_prompts = sorted(config.prompts, key=lambda item: item["t"])
        self._next_cycle_t = 0.0
        self._cycle_thread: threading.Thread | None = None
        self._lock = threading.Lock()
        self.last_solution = None

    # -- prompt handling -------------------------------------------------
    def inject_prompt(self, text: str, immediate: bool = True) -> None:
        with self._lock:
            self.active_prompt = text
            if immediate:
                self._next_cycle_t = self.sim.state.t

    def _activate_scheduled_prompts(self) -> None:
        t = self.sim.state.t
        while self._pending_prompts and self._pending_prompts[0]["t"] <= t:
            prompt = self._pending_prompts.pop(0)
            self.inject_prompt(prompt["text"])

    # -- decision cycle ---------------------------------------------------
    def _cycle_due(self) -> bool:
        if self.active_prompt is None:
            return False
        if self._cycle_thread is not None and self._cycle_thread.is_alive():
            return False  # one in flight
        if self.sim.state.t < self._next_cycle_t:
            return False
        return self.sim.log.span() + 1e-9 >= self.config.decision.window_s

    def _launch_cycle(self) -> None:
        snapshot = self.sim.snapshot(self.config.decision.window_s, self.config.decision.samples)
        prompt = self.active_prompt

        def cycle():
            try:
                self.engine.decide_snapshot(prompt, snapshot, adapter=self.adapter)
            except Exception as exc:  # noqa: BLE001 - logged no-op cycle
                self.engine.log.append({
                    "t": self.sim.state.t,
                    "human_prompt": prompt,
                    "error": str(exc),
                    "outcome": {"action": "noop", "instruction": None},
                })

        thread = threading.Thread(target=cycle, daemon=True)
        thread.start()
        if self.config.sync_cycles:
            thread.join()
        self._cycle_thread = thread
        self._next_cycle_t = self.sim.state.t + self.config.cadence_s

    # -- loop --------------------------------------------------------------
    def tick(self) -> None:
        self._activate_scheduled_prompts()
        if self._cycle_due():
            self._launch_cycle()
        params = self.store.snapshot()
        solution = self.controller.step(self.sim.state, params)
        self.last_solution = solution
        if solution.status == "infeasible_params":
            control = ControlInput(d_delta=0.0, a=params.a_min)
        else:
            control = ControlInput(
                d_delta=solution.first_input.d_delta * SIM_DT / self.config.horizon.dt,
                a=solution.first_input.a,
            )
        self.sim.advance(control)

    def run(self, duration: float | None = None) -> RunArtifacts:
        duration = duration if duration is not None else self.config.duration
        steps = int(round(duration / SIM_DT))
        for _ in range(steps):
            self.tick()
        return self.finalize()

    def finalize(self) -> RunArtifacts:
        state_log_path = None
        if self._out_dir:
            state_log_path = self._out_dir / "state_log.csv"
            self.sim.log.export_csv(state_log_path)
        return RunArtifacts(
            state_log_path=str(state_log_path) if state_log_path else None,
            journal_path=str(self._out_dir / "params_journal.jsonl") if self._out_dir else None,
            decision_log_path=str(self._out_dir / "decisions.jsonl") if self._out_dir else None,
            decisions=list(self.engine.log),
            journal=self.store.journal(),
            final_params=self.store.snapshot().as_dict(),
            duration=self.sim.state.t,
            crashed=self.sim.crash.crashed,
        )

    # -- telemetry ----------------------------------------------------------
    def telemetry_frame(self) -> TelemetryFrame:
        state = self.sim.state
        d_left, d_right = wall_distances(self.track, state.pose.s, state.pose.n)
        x, y, heading = frenet_to_cartesian(self.track, state.pose)
        last_decision = None
        if self.engine.log:
            outcome = self.engine.log[-1].get("outcome", {})
            last_decision = outcome.get("action")
            if outcome.get("instruction"):
                last_decision = f"{last_decision}: {outcome['instruction']}"
        last_update = self.store.journal()[-1] if self.store.journal() else None
        return TelemetryFrame(
            t=state.t,
            s=state.pose.s,
            n=state.pose.n,
            delta_phi=state.pose.delta_phi,
            v=state.v,
            delta=state.delta,
            d_left=float(d_left),
            d_right=float(d_right),
            crashed=self.sim.crash.crashed,
            x=x,
            y=y,
            heading=heading,
            params_hash=params_hash(self.store.snapshot()),
            last_decision=last_decision,
            last_update={"update": last_update["update"], "warnings": last_update["warnings"]}
            if last_update else None,
        )


def run_loop(config: RunConfig) -> RunArtifacts:
    """Headless closed-loop run in pure sim-time."""
    return Orchestrator(config).run()
