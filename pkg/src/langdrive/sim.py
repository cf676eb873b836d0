"""Forward integration of the Frenet kinematic model, crash latching, and
state-window sampling.

Model (state [s, n, dphi, delta, v], input [d_delta, a]):

    s'    = v cos(dphi) / (1 - kappa(s) n)
    n'    = v sin(dphi)
    dphi' = v tan(delta) / L - kappa(s) s'
    v'    = a

The steering increment is applied once at the start of a step and held for
the step; [s, n, dphi, v] advance by one RK4 step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .track import FrenetPose, TrackSpec, curvature_at, halfwidths_at, wall_distances, wrap_angle

WHEELBASE = 0.33          # m, front-to-rear axle
DELTA_HW_MAX = 0.4        # rad, steering hardware bound
DDELTA_HW_MAX = 0.1       # rad per MPC step, steering-rate hardware bound
SIM_DT = 0.02             # s, fixed simulation tick
SINGULARITY_EPS = 1e-3
CRASH_CLEAR_DIST = 0.2    # m
CRASH_CLEAR_TIME = 1.0    # s


class SingularityError(Exception):
    """1 - kappa*n fell below the singularity guard during integration."""


class InsufficientHistoryError(Exception):
    """State log does not span the requested sampling window."""


@dataclass(frozen=True)
class VehicleState:
    pose: FrenetPose
    delta: float = 0.0
    v: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class ControlInput:
    d_delta: float = 0.0
    a: float = 0.0


@dataclass(frozen=True)
class CrashStatus:
    crashed: bool = False
    since: float = 0.0
    clear_since: float | None = None


@dataclass(frozen=True)
class SnapshotSample:
    s: float
    d: float
    s_speed: float
    d_speed: float
    dist_left: float
    dist_right: float


@dataclass(frozen=True)
class StateSnapshot:
    duration: float
    samples: tuple[SnapshotSample, ...]
    crashed: bool


def _deriv(track: TrackSpec, s, n, dphi, v, delta, a, wheelbase):
    kappa = curvature_at(track, s)
    denom = 1.0 - kappa * n
    if np.any(denom <= SINGULARITY_EPS):
        raise SingularityError(f"1 - kappa*n <= {SINGULARITY_EPS} at s={float(np.min(s)):.3f}, n={float(np.max(np.abs(n))):.3f}")
    s_dot = v * np.cos(dphi) / denom
    n_dot = v * np.sin(dphi)
    dphi_dot = v * np.tan(delta) / wheelbase - kappa * s_dot
    return s_dot, n_dot, dphi_dot, a


def step(
    state: VehicleState,
    control: ControlInput,
    dt: float,
    track: TrackSpec,
    wheelbase: float = WHEELBASE,
    delta_max: float = DELTA_HW_MAX,
) -> VehicleState:
    """Advance one RK4 step. The steering increment applies at step start."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    delta = float(np.clip(state.delta + control.d_delta, -delta_max, delta_max))
    z = np.array([state.pose.s, state.pose.n, state.pose.delta_phi, state.v])

    def f(zz):
        return np.array(_deriv(track, zz[0], zz[1], zz[2], zz[3], delta, control.a, wheelbase))

    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    pose = FrenetPose(
        s=float(track.wrap_s(z[0])),
        n=float(z[1]),
        delta_phi=float(wrap_angle(z[2])),
    )
    return VehicleState(pose=pose, delta=delta, v=float(z[3]), t=state.t + dt)


def detect_crash(track: TrackSpec, state: VehicleState, prior: CrashStatus) -> CrashStatus:
    """Latch on wall contact; clear after sustained clearance.

    Latches the instant min(d_left, d_right) <= 0 and clears only once the
    minimum wall distance has stayed above CRASH_CLEAR_DIST for
    CRASH_CLEAR_TIME continuously.
    """
    d_left, d_right = wall_distances(track, state.pose.s, state.pose.n)
    clearance = min(float(d_left), float(d_right))
    if not prior.crashed:
        if clearance <= 0.0:
            return CrashStatus(crashed=True, since=state.t, clear_since=None)
        return prior
    if clearance > CRASH_CLEAR_DIST:
        started = prior.clear_since if prior.clear_since is not None else state.t
        if state.t - started >= CRASH_CLEAR_TIME:
            return CrashStatus(crashed=False, since=prior.since, clear_since=None)
        return replace(prior, clear_since=started)
    return replace(prior, clear_since=None)


class StateLog:
    """Append-only log of the simulated trajectory at the sim tick rate."""

    COLUMNS = ("t", "s", "n", "dphi", "delta", "v", "dleft", "dright", "crashed")

    def __init__(self) -> None:
        self.rows: list[tuple] = []

    def append(self, state: VehicleState, d_left: float, d_right: float, crashed: bool) -> None:
        self.rows.append(
            (state.t, state.pose.s, state.pose.n, state.pose.delta_phi,
             state.delta, state.v, d_left, d_right, crashed)
        )

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.COLUMNS.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def span(self) -> float:
        if len(self.rows) < 2:
            return 0.0
        return self.rows[-1][0] - self.rows[0][0]

    def export_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.COLUMNS)
            for row in self.rows:
                writer.writerow([*row[:-1], bool(row[-1])])


def _unwrap_s(s: np.ndarray, period: float) -> np.ndarray:
    out = s.copy()
    jumps = np.diff(s)
    corrections = np.zeros_like(s)
    corrections[1:] = np.cumsum(np.where(jumps < -period / 2, period, np.where(jumps > period / 2, -period, 0.0)))
    return out + corrections


def sample_window(log: StateLog, duration: float, count: int, track: TrackSpec | None = None) -> StateSnapshot:
    """Sample `count` evenly spaced points over the trailing `duration`.

    Speeds are finite differences on the dense log (central where possible),
    so d-speed is signed. The crashed flag reflects the latched status at
    the window end.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if log.span() + 1e-9 < duration:
        raise InsufficientHistoryError(
            f"history spans {log.span():.3f} s, need {duration:.3f} s"
        )
    t = log.column("t")
    s_raw = log.column("s")
    period = track.total_length if track is not None and track.closed else None
    s = _unwrap_s(s_raw, period) if period else s_raw
    n = log.column("n")
    dl = log.column("dleft")
    dr = log.column("dright")

    # per-log-index speeds, central differences with one-sided ends
    s_speed = np.gradient(s, t)
    d_speed = np.gradient(n, t)

    t_end = t[-1]
    sample_times = t_end - duration + (np.arange(count) + 1) * duration / count
    samples = []
    for tau in sample_times:
        s_tau = np.interp(tau, t, s)
        if period:
            s_tau = s_tau % period
        samples.append(
            SnapshotSample(
                s=float(s_tau),
                d=float(np.interp(tau, t, n)),
                s_speed=float(np.interp(tau, t, s_speed)),
                d_speed=float(np.interp(tau, t, d_speed)),
                dist_left=float(np.interp(tau, t, dl)),
                dist_right=float(np.interp(tau, t, dr)),
            )
        )
    crashed = bool(log.rows[-1][-1])
    return StateSnapshot(duration=duration, samples=tuple(samples), crashed=crashed)


class Simulator:
    """Single-owner simulation loop: integrates, clamps wall contact,
    latches crashes, and logs every tick."""

    def __init__(self, track: TrackSpec, initial: VehicleState, crashed: bool = False):
        self.track = track
        self.state = initial
        self.crash = CrashStatus(crashed=crashed, since=initial.t if crashed else 0.0)
        self.log = StateLog()
        self._record()

    def _record(self) -> None:
        d_left, d_right = wall_distances(self.track, self.state.pose.s, self.state.pose.n)
        self.log.append(self.state, float(d_left), float(d_right), self.crash.crashed)

    def advance(self, control: ControlInput, dt: float = SIM_DT) -> VehicleState:
        prior = self.state
        d_left, d_right = wall_distances(self.track, prior.pose.s, prior.pose.n)
        in_contact = min(float(d_left), float(d_right)) <= 1e-9
        if self.crash.crashed and in_contact and prior.v >= 0.0:
            # wedged against the wall: forward drive stalls in place with the
            # front axle pinned; only a negative velocity (reversing) frees
            # the car
            v_new = prior.v + control.a * dt
            if v_new >= 0.0:
                state = replace(prior, v=0.0, t=prior.t + dt)
                self.state = state
                self.crash = detect_crash(self.track, state, self.crash)
                self._record()
                return state
        state = step(self.state, control, dt, self.track)
        # wall contact: clamp n at the wall (car may still reverse out)
        wl, wr = halfwidths_at(self.track, state.pose.s)
        n = state.pose.n
        if n > wl:
            n = float(wl)
        elif n < -wr:
            n = float(-wr)
        if n != state.pose.n:
            state = replace(state, pose=replace(state.pose, n=n))
        self.state = state
        self.crash = detect_crash(self.track, state, self.crash)
        self._record()
        return state

    def snapshot(self, duration: float = 2.0, count: int = 5) -> StateSnapshot:
        return sample_window(self.log, duration, count, self.track)
