"""langdrive: language-steered MPC workbench for a simulated track car."""

from .adapter import MpcAdapter, ParamUpdate, parse_params, validate_and_clamp
from .decision import DecisionAction, DecisionEngine, DecisionOutcome, parse_decision
from .gateway import ChatRequest, RemoteBackend, ReplayBackend, ScriptedBackend, stats_summary
from .mpc import HorizonConfig, MpcController, MpcSolution, solve_mpc
from .orchestrator import Orchestrator, RunConfig, run_loop
from .params import PARAM_SCHEMA, MpcParams, ParamStore
from .rag import MemoryStore, bundled_store
from .sim import ControlInput, Simulator, StateSnapshot, VehicleState, sample_window, step
from .track import FrenetPose, TrackSpec, cartesian_to_frenet, frenet_to_cartesian, load_track

__version__ = "0.1.0"

__all__ = [
    "MpcAdapter", "ParamUpdate", "parse_params", "validate_and_clamp",
    "DecisionAction", "DecisionEngine", "DecisionOutcome", "parse_decision",
    "ChatRequest", "RemoteBackend", "ReplayBackend", "ScriptedBackend", "stats_summary",
    "HorizonConfig", "MpcController", "MpcSolution", "solve_mpc",
    "Orchestrator", "RunConfig", "run_loop",
    "PARAM_SCHEMA", "MpcParams", "ParamStore",
    "MemoryStore", "bundled_store",
    "ControlInput", "Simulator", "StateSnapshot", "VehicleState", "sample_window", "step",
    "FrenetPose", "TrackSpec", "cartesian_to_frenet", "frenet_to_cartesian", "load_track",
]
