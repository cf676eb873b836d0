"""Receding-horizon kinematic MPC solved as a box-constrained QP.

Decision variables are the stacked predicted states, inputs, and lateral
slack variables. Dynamics enter as a heavy quadratic penalty on the
linearized one-step residual, which keeps the problem a pure box QP: state
and input limits are exact box bounds (so a pinched velocity box really
pins the predicted speeds), while the lateral corridor is soft. Each
lateral coordinate splits into a hard in-corridor part plus a penalized
slack in the active wall direction, so corridor violations are always
visible as positive slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boxqp import BoxQp, solve_box_qp
from .params import MpcParams
from .sim import (
    DDELTA_HW_MAX,
    DELTA_HW_MAX,
    SIM_DT,
    SINGULARITY_EPS,
    WHEELBASE,
    ControlInput,
    FrenetPose,
    VehicleState,
)
from .track import TrackSpec, curvature_at, curvature_slope_at, halfwidths_at, wrap_angle

# state layout [s, n, dphi, delta, v]; dynamics subvector z = [s, n, dphi, v]
IS, IN, IPHI, IDELTA, IV = range(5)
Z2X = np.array([IS, IN, IPHI, IV])

W_DYN = 1e4       # dynamics-residual penalty
W_SLACK = 1e4     # lateral corridor slack penalty
R_REG = 1e-6      # fixed input regularizer (the small R term)
V_EPS = 0.3       # m/s floor for the lateral-acceleration steering bound
LIN_ERR_MAX = 0.1
SQP_MAX_ITERS = 3

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE_PARAMS = "infeasible_params"


@dataclass(frozen=True)
class HorizonConfig:
    n_steps: int = 20
    dt: float = 0.05
    v_ref: float = 5.0

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError("prediction horizon must be >= 2 steps")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class MpcSolution:
    first_input: ControlInput
    predicted_states: tuple[VehicleState, ...]
    predicted_inputs: tuple[ControlInput, ...]
    cost: float
    slack_max: float
    iterations: int
    status: str
    v_command: float
    states_array: np.ndarray | None = field(default=None, repr=False)
    inputs_array: np.ndarray | None = field(default=None, repr=False)
    clamp_mask: np.ndarray | None = field(default=None, repr=False)


def state_vec(state: VehicleState) -> np.ndarray:
    return np.array([state.pose.s, state.pose.n, state.pose.delta_phi, state.delta, state.v])


def _f_batch(track: TrackSpec, z: np.ndarray, delta: np.ndarray, a: np.ndarray, wheelbase: float):
    """Dynamics of z = [s, n, phi, v]; denominator clipped at the singularity
    guard so reference rollouts never blow up."""
    s, n, phi, v = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    kappa = curvature_at(track, s)
    denom = np.maximum(1.0 - kappa * n, SINGULARITY_EPS)
    g = v * np.cos(phi) / denom
    out = np.empty_like(z)
    out[..., 0] = g
    out[..., 1] = v * np.sin(phi)
    out[..., 2] = v * np.tan(delta) / wheelbase - kappa * g
    out[..., 3] = a
    return out


def _jac_batch(track: TrackSpec, z: np.ndarray, delta: np.ndarray, wheelbase: float):
    """(N,4,4) state Jacobian and (N,4) steering Jacobian of _f_batch."""
    s, n, phi, v = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    kappa = curvature_at(track, s)
    kappa_s = curvature_slope_at(track, s)
    denom = np.maximum(1.0 - kappa * n, SINGULARITY_EPS)
    clipped = (1.0 - kappa * n) < SINGULARITY_EPS
    kappa_s = np.where(clipped, 0.0, kappa_s)  # frozen at the guard
    cphi = np.cos(phi)
    sphi = np.sin(phi)
    g = v * cphi / denom
    d2 = denom * denom
    N = z.shape[0]
    J = np.zeros((N, 4, 4))
    dg_ds = np.where(clipped, 0.0, v * cphi * kappa_s * n / d2)
    dg_dn = np.where(clipped, 0.0, v * cphi * kappa / d2)
    dg_dphi = -v * sphi / denom
    dg_dv = cphi / denom
    J[:, 0, 0] = dg_ds
    J[:, 0, 1] = dg_dn
    J[:, 0, 2] = dg_dphi
    J[:, 0, 3] = dg_dv
    J[:, 1, 2] = v * cphi
    J[:, 1, 3] = sphi
    tan_d = np.tan(delta)
    J[:, 2, 0] = -kappa_s * g - kappa * dg_ds
    J[:, 2, 1] = -kappa * dg_dn
    J[:, 2, 2] = -kappa * dg_dphi
    J[:, 2, 3] = tan_d / wheelbase - kappa * dg_dv
    Jd = np.zeros((N, 4))
    Jd[:, 2] = v * (1.0 + tan_d * tan_d) / wheelbase
    return J, Jd


def _step_batch(track: TrackSpec, states: np.ndarray, inputs: np.ndarray, dt: float,
                wheelbase: float = WHEELBASE):
    """Nonlinear one-step map for a batch of (state, input) pairs."""
    delta_eff = np.clip(states[:, IDELTA] + inputs[:, 0], -DELTA_HW_MAX, DELTA_HW_MAX)
    a = inputs[:, 1]
    z = states[:, Z2X]
    k1 = _f_batch(track, z, delta_eff, a, wheelbase)
    k2 = _f_batch(track, z + 0.5 * dt * k1, delta_eff, a, wheelbase)
    k3 = _f_batch(track, z + 0.5 * dt * k2, delta_eff, a, wheelbase)
    k4 = _f_batch(track, z + dt * k3, delta_eff, a, wheelbase)
    z_next = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    out = np.empty_like(states)
    out[:, Z2X] = z_next
    out[:, IDELTA] = delta_eff
    return out


def linearize_batch(track: TrackSpec, states: np.ndarray, inputs: np.ndarray, dt: float,
                    wheelbase: float = WHEELBASE):
    """Discrete LTV matrices (A, B, c) of the RK4 step about each reference.

    Zero dt is the degenerate no-op step: A = I, B = 0, c = 0.
    """
    N = states.shape[0]
    if dt == 0.0:
        return (np.tile(np.eye(5), (N, 1, 1)), np.zeros((N, 5, 2)), np.zeros((N, 5)))

    delta_raw = states[:, IDELTA] + inputs[:, 0]
    delta_eff = np.clip(delta_raw, -DELTA_HW_MAX, DELTA_HW_MAX)
    clamp_pass = (np.abs(delta_raw) < DELTA_HW_MAX).astype(float)
    a = inputs[:, 1]
    z = states[:, Z2X]
    eye = np.tile(np.eye(4), (N, 1, 1))
    fa = np.zeros((N, 4))
    fa[:, 3] = 1.0

    def stage(zs, dz, ddelta, da, scale_prev):
        k = _f_batch(track, zs, delta_eff, a, wheelbase)
        J, Jd = _jac_batch(track, zs, delta_eff, wheelbase)
        dk = np.einsum("nij,njk->nik", J, dz)
        dkd = np.einsum("nij,nj->ni", J, ddelta) + Jd
        dka = np.einsum("nij,nj->ni", J, da) + fa
        return k, dk, dkd, dka

    k1, dk1, dk1d, dk1a = stage(z, eye, np.zeros((N, 4)), np.zeros((N, 4)), 0.0)
    k2, dk2, dk2d, dk2a = stage(z + 0.5 * dt * k1, eye + 0.5 * dt * dk1, 0.5 * dt * dk1d, 0.5 * dt * dk1a, 0.5)
    k3, dk3, dk3d, dk3a = stage(z + 0.5 * dt * k2, eye + 0.5 * dt * dk2, 0.5 * dt * dk2d, 0.5 * dt * dk2a, 0.5)
    k4, dk4, dk4d, dk4a = stage(z + dt * k3, eye + dt * dk3, dt * dk3d, dt * dk3a, 1.0)

    z_next = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    Dz = eye + dt / 6.0 * (dk1 + 2 * dk2 + 2 * dk3 + dk4)
    Dd = dt / 6.0 * (dk1d + 2 * dk2d + 2 * dk3d + dk4d)
    Da = dt / 6.0 * (dk1a + 2 * dk2a + 2 * dk3a + dk4a)

    A = np.zeros((N, 5, 5))
    A[:, Z2X[:, None], Z2X[None, :]] = Dz
    A[:, Z2X, IDELTA] = Dd * clamp_pass[:, None]
    A[:, IDELTA, IDELTA] = clamp_pass
    B = np.zeros((N, 5, 2))
    B[:, Z2X, 0] = Dd * clamp_pass[:, None]
    B[:, IDELTA, 0] = clamp_pass
    B[:, Z2X, 1] = Da

    x_next = np.empty((N, 5))
    x_next[:, Z2X] = z_next
    x_next[:, IDELTA] = delta_eff
    c = x_next - np.einsum("nij,nj->ni", A, states) - np.einsum("nij,nj->ni", B, inputs)
    return A, B, c


def linearize(state: VehicleState, control: ControlInput, track: TrackSpec, dt: float):
    """Single-point discrete LTV linearization (A, B, c)."""
    kappa = float(curvature_at(track, state.pose.s))
    if 1.0 - kappa * state.pose.n <= SINGULARITY_EPS and dt != 0.0:
        raise ValueError(
            f"reference at singularity: 1 - kappa*n <= {SINGULARITY_EPS} at s={state.pose.s:.3f}"
        )
    A, B, c = linearize_batch(
        track,
        state_vec(state)[None, :],
        np.array([[control.d_delta, control.a]]),
        dt,
    )
    return A[0], B[0], c[0]


@dataclass
class QpPlan:
    """Decision vector layout: stacked state deviations from the reference
    (k = 1..N), input deviations (k = 0..N-1), then lateral slacks."""

    n_steps: int
    dt: float
    x0: np.ndarray
    ref_states: np.ndarray
    ref_inputs: np.ndarray
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    slack_sign: np.ndarray
    corridor_lo: np.ndarray
    corridor_hi: np.ndarray

    @property
    def dim(self) -> int:
        return 8 * self.n_steps

    def decode(self, xi: np.ndarray):
        N = self.n_steps
        states = self.ref_states[1:] + xi[: 5 * N].reshape(N, 5)
        inputs = self.ref_inputs + xi[5 * N : 7 * N].reshape(N, 2)
        slacks = xi[7 * N :].copy()
        states[:, IN] = states[:, IN] + self.slack_sign * slacks
        return states, inputs, slacks

    def encode(self, states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """Initial iterate encoding trajectories as deviations; lateral
        offsets beyond the corridor spill into the slack variables."""
        N = self.n_steps
        xi = np.zeros(self.dim)
        n_abs = states[:, IN]
        nu_abs = np.clip(n_abs, self.corridor_lo, self.corridor_hi)
        sigma = np.abs(n_abs - nu_abs)
        dev = states - self.ref_states[1:]
        dev[:, IN] = nu_abs - self.ref_states[1:, IN]
        xi[: 5 * N] = dev.reshape(-1)
        xi[5 * N : 7 * N] = (inputs - self.ref_inputs).reshape(-1)
        xi[7 * N :] = sigma
        return xi


def assemble_qp(
    state: VehicleState,
    track: TrackSpec,
    params: MpcParams,
    horizon: HorizonConfig,
    ref_states: np.ndarray,
    ref_inputs: np.ndarray,
    wheelbase: float = WHEELBASE,
) -> tuple[BoxQp, QpPlan]:
    """Build the box QP about a reference trajectory.

    ``ref_states`` is (N+1, 5) with row 0 equal to the current state;
    ``ref_inputs`` is (N, 2).
    """
    N = horizon.n_steps
    x0 = state_vec(state)
    A, B, c = linearize_batch(track, ref_states[:N], ref_inputs, horizon.dt, wheelbase)

    s_ref = ref_states[1:, IS]
    wl, wr = halfwidths_at(track, s_ref)
    hi = np.maximum(0.0, wl - params.track_safety_margin)
    lo = -np.maximum(0.0, wr - params.track_safety_margin)
    n_ref = ref_states[1:, IN]
    slack_sign = np.where(n_ref >= 0, 1.0, -1.0)
    dim = 8 * N

    # stage cost over absolute quantities, expanded about the reference:
    # quadratic diagonal, linear pull toward the setpoints, constant
    q_diag = np.zeros(7 * N)
    q_lin = np.zeros(7 * N)
    qs = q_diag[: 5 * N].reshape(N, 5)
    ls = q_lin[: 5 * N].reshape(N, 5)
    qs[:, IN] = params.qn
    ls[:, IN] = 2.0 * params.qn * n_ref
    qs[:, IPHI] = params.qalpha
    ls[:, IPHI] = 2.0 * params.qalpha * ref_states[1:, IPHI]
    qs[:, IV] = params.qv
    dv = ref_states[1:, IV] - horizon.v_ref
    ls[:, IV] = 2.0 * params.qv * dv
    qu = q_diag[5 * N : 7 * N].reshape(N, 2)
    lu = q_lin[5 * N : 7 * N].reshape(N, 2)
    qu[:, 0] = params.qddelta + R_REG
    qu[:, 1] = params.qac + R_REG
    lu[:] = 2.0 * qu * ref_inputs
    c0 = float(
        params.qn * (n_ref**2).sum()
        + params.qalpha * (ref_states[1:, IPHI] ** 2).sum()
        + params.qv * (dv**2).sum()
        + (qu * ref_inputs**2).sum()
    )

    # dynamics residual MT xi + m over the decision vector; m is the
    # reference-trajectory defect. The slack columns mirror the n-columns
    # scaled by the active wall sign (n = nu + sign * sigma).
    MT = np.zeros((5 * N, dim))
    pred = _step_batch(track, ref_states[:N], ref_inputs, horizon.dt, wheelbase)
    m = (ref_states[1:] - pred).reshape(-1)
    eye5 = np.eye(5)
    for k in range(N):
        rows = slice(5 * k, 5 * k + 5)
        MT[rows, 5 * k : 5 * k + 5] = eye5
        MT[rows, 5 * N + 2 * k : 5 * N + 2 * k + 2] = -B[k]
        if k > 0:
            MT[rows, 5 * (k - 1) : 5 * k] = -A[k]
    n_cols = 5 * np.arange(N) + IN
    idx_sigma = np.arange(7 * N, 8 * N)
    MT[:, idx_sigma] = MT[:, n_cols] * slack_sign[None, :]

    P = W_DYN * (MT.T @ MT)
    diag = np.arange(7 * N)
    P[diag, diag] += q_diag
    P[idx_sigma, idx_sigma] += params.qn + W_SLACK
    P[n_cols, idx_sigma] += params.qn * slack_sign
    P[idx_sigma, n_cols] += params.qn * slack_sign
    q = np.zeros(dim)
    q[: 7 * N] = q_lin
    q[idx_sigma] = q_lin[n_cols] * slack_sign
    q += 2.0 * W_DYN * (MT.T @ m)
    c0 = c0 + W_DYN * float(m @ m)

    H = P + P.T
    g = q

    lb = np.full(dim, -np.inf)
    ub = np.full(dim, np.inf)
    v_ref_stage = np.maximum(np.abs(ref_states[1:, IV]), V_EPS)
    delta_cap = np.minimum(
        DELTA_HW_MAX, np.arctan(params.alat_max * wheelbase / np.maximum(v_ref_stage**2, V_EPS**2))
    )
    lbs = lb[: 5 * N].reshape(N, 5)
    ubs = ub[: 5 * N].reshape(N, 5)
    lbs[:, IN] = lo - n_ref
    ubs[:, IN] = hi - n_ref
    lbs[:, IDELTA] = -delta_cap - ref_states[1:, IDELTA]
    ubs[:, IDELTA] = delta_cap - ref_states[1:, IDELTA]
    lbs[:, IV] = params.v_min - ref_states[1:, IV]
    ubs[:, IV] = params.v_max - ref_states[1:, IV]
    lbu = lb[5 * N : 7 * N].reshape(N, 2)
    ubu = ub[5 * N : 7 * N].reshape(N, 2)
    lbu[:, 0] = -DDELTA_HW_MAX - ref_inputs[:, 0]
    ubu[:, 0] = DDELTA_HW_MAX - ref_inputs[:, 0]
    lbu[:, 1] = params.a_min - ref_inputs[:, 1]
    ubu[:, 1] = params.a_max - ref_inputs[:, 1]
    lb[idx_sigma] = 0.0

    qp = BoxQp(H=H, g=g, lb=lb, ub=ub, const=c0, validate=False)
    plan = QpPlan(
        n_steps=N,
        dt=horizon.dt,
        x0=x0,
        ref_states=ref_states.copy(),
        ref_inputs=ref_inputs.copy(),
        A=A,
        B=B,
        c=c,
        slack_sign=slack_sign,
        corridor_lo=lo,
        corridor_hi=hi,
    )
    return qp, plan


def _rollout(track: TrackSpec, x0: np.ndarray, inputs: np.ndarray, dt: float,
             wheelbase: float = WHEELBASE) -> np.ndarray:
    """Sequential nonlinear rollout (scalar math; hot path)."""
    s_prof, k_prof = track.s_prof, track.curv_prof
    length = track.total_length
    closed = track.closed
    inv_l = 1.0 / wheelbase

    def kappa_of(s):
        if closed:
            s = s % length
        elif s < 0.0 or s > length:
            s = min(max(s, 0.0), length)
        return float(np.interp(s, s_prof, k_prof))

    def rates(s, n, phi, v, tan_d):
        kappa = kappa_of(s)
        denom = 1.0 - kappa * n
        if denom < SINGULARITY_EPS:
            denom = SINGULARITY_EPS
        g = v * math.cos(phi) / denom
        return g, v * math.sin(phi), v * tan_d * inv_l - kappa * g

    out = np.empty((len(inputs) + 1, 5))
    out[0] = x0
    s, n, phi, delta, v = (float(val) for val in x0)
    for k, (d_delta, a) in enumerate(inputs):
        delta = min(max(delta + float(d_delta), -DELTA_HW_MAX), DELTA_HW_MAX)
        tan_d = math.tan(delta)
        k1 = rates(s, n, phi, v, tan_d)
        vm = v + 0.5 * dt * a
        k2 = rates(s + 0.5 * dt * k1[0], n + 0.5 * dt * k1[1], phi + 0.5 * dt * k1[2], vm, tan_d)
        k3 = rates(s + 0.5 * dt * k2[0], n + 0.5 * dt * k2[1], phi + 0.5 * dt * k2[2], vm, tan_d)
        ve = v + dt * a
        k4 = rates(s + dt * k3[0], n + dt * k3[1], phi + dt * k3[2], ve, tan_d)
        s += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        n += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        phi += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        v = ve
        out[k + 1] = (s, n, phi, delta, v)
    return out


def rollout_reference(x0: np.ndarray, track: TrackSpec, horizon: HorizonConfig) -> tuple[np.ndarray, np.ndarray]:
    """Coasting rollout (zero inputs) used as a cold-start reference."""
    inputs = np.zeros((horizon.n_steps, 2))
    return _rollout(track, x0, inputs, horizon.dt), inputs


def _sanitize_reference(track: TrackSpec, states: np.ndarray) -> np.ndarray:
    """Clamp reference lateral offsets away from the curvature singularity."""
    out = states.copy()
    kappa = np.abs(curvature_at(track, out[:, IS]))
    limit = np.where(kappa > 1e-9, 0.9 / np.maximum(kappa, 1e-9), np.inf)
    wl, wr = halfwidths_at(track, out[:, IS])
    hi = np.minimum(limit, wl + 0.5)
    lo = -np.minimum(limit, wr + 0.5)
    out[:, IN] = np.clip(out[:, IN], lo, hi)
    return out


def corridor_violation(track: TrackSpec, params: MpcParams, s: float, n: float) -> float:
    wl, wr = halfwidths_at(track, s)
    hi = max(0.0, float(wl) - params.track_safety_margin)
    lo = -max(0.0, float(wr) - params.track_safety_margin)
    return max(0.0, n - hi, lo - n)


def solve_mpc(
    state: VehicleState,
    track: TrackSpec,
    params: MpcParams,
    horizon: HorizonConfig,
    warm: tuple[np.ndarray, np.ndarray] | None = None,
    max_qp_iter: int = 60,
    qp_tol: float = 1e-8,
    clamp_hint: np.ndarray | None = None,
) -> MpcSolution:
    """One receding-horizon solve: linearize, assemble, box-QP, repeat while
    the linearization error is large (up to SQP_MAX_ITERS)."""
    if params.v_min > params.v_max or params.a_min > params.a_max:
        return MpcSolution(
            first_input=ControlInput(d_delta=0.0, a=params.a_min),
            predicted_states=(),
            predicted_inputs=(),
            cost=math.nan,
            slack_max=0.0,
            iterations=0,
            status=STATUS_INFEASIBLE_PARAMS,
            v_command=state.v,
        )

    x0 = state_vec(state)
    if warm is not None:
        ref_states, ref_inputs = warm[0].copy(), warm[1].copy()
        ref_states[0] = x0
    else:
        ref_states, ref_inputs = rollout_reference(x0, track, horizon)
    ref_states = _sanitize_reference(track, ref_states)
    ref_states[0] = x0

    total_iters = 0
    states = inputs = slacks = None
    result = None
    for sqp_iter in range(SQP_MAX_ITERS):
        qp, plan = assemble_qp(state, track, params, horizon, ref_states, ref_inputs)
        xi0 = plan.encode(ref_states[1:], ref_inputs)
        result = solve_box_qp(qp, x0=xi0, max_iter=max_qp_iter, tol=qp_tol, clamp_hint=clamp_hint)
        clamp_hint = result.clamped
        total_iters += result.iterations
        states, inputs, slacks = plan.decode(result.x)
        # linearization error: nonlinear one-step map vs the LTV model,
        # both evaluated at the solution trajectory
        sol_prev = np.vstack([x0[None, :], states[:-1]])
        nonlin = _step_batch(track, sol_prev, inputs, horizon.dt)
        lin = (
            np.einsum("nij,nj->ni", plan.A, sol_prev)
            + np.einsum("nij,nj->ni", plan.B, inputs)
            + plan.c
        )
        lin_err = float(np.max(np.abs(nonlin - lin)))
        if lin_err <= LIN_ERR_MAX or sqp_iter == SQP_MAX_ITERS - 1:
            break
        ref_states = _sanitize_reference(track, np.vstack([x0[None, :], states]))
        ref_states[0] = x0
        ref_inputs = inputs

    slack_max = float(np.max(slacks)) if len(slacks) else 0.0
    slack_max = max(slack_max, corridor_violation(track, params, x0[IS], x0[IN]))

    pred_states = [state]
    for k in range(horizon.n_steps):
        row = states[k]
        pred_states.append(
            VehicleState(
                pose=FrenetPose(
                    s=float(track.wrap_s(row[IS])),
                    n=float(row[IN]),
                    delta_phi=float(wrap_angle(row[IPHI])),
                ),
                delta=float(row[IDELTA]),
                v=float(row[IV]),
                t=state.t + (k + 1) * horizon.dt,
            )
        )
    pred_inputs = tuple(ControlInput(d_delta=float(u[0]), a=float(u[1])) for u in inputs)

    return MpcSolution(
        first_input=pred_inputs[0],
        predicted_states=tuple(pred_states),
        predicted_inputs=pred_inputs,
        cost=result.objective,
        slack_max=slack_max,
        iterations=total_iters,
        status=result.status,
        v_command=float(states[0, IV]),
        states_array=np.vstack([x0[None, :], states]),
        inputs_array=inputs.copy(),
        clamp_mask=result.clamped,
    )


class MpcController:
    """Closed-loop wrapper: warm starts from the previous solution, shifting
    it by one horizon step whenever a full MPC period has elapsed."""

    def __init__(self, track: TrackSpec, horizon: HorizonConfig | None = None, sim_dt: float = SIM_DT):
        self.track = track
        self.horizon = horizon if horizon is not None else HorizonConfig()
        self.sim_dt = sim_dt
        self._warm: tuple[np.ndarray, np.ndarray] | None = None
        self._clamp: np.ndarray | None = None
        self._shift_acc = 0.0

    def reset(self) -> None:
        self._warm = None
        self._clamp = None
        self._shift_acc = 0.0

    def _advance_warm(self, state: VehicleState) -> tuple[np.ndarray, np.ndarray] | None:
        if self._warm is None:
            return None
        states, inputs = self._warm
        self._shift_acc += self.sim_dt
        if self._shift_acc >= self.horizon.dt:
            self._shift_acc -= self.horizon.dt
            states = np.vstack([states[1:], states[-1:]])
            inputs = np.vstack([inputs[1:], inputs[-1:]])
        # re-base arc positions onto the current (wrapped) s frame, and
        # headings onto the current (-pi, pi] branch
        offset = state.pose.s - states[0, IS]
        if self.track.closed:
            L = self.track.total_length
            offset = (offset + L / 2) % L - L / 2
        states = states.copy()
        states[:, IS] += offset
        phi_gap = state.pose.delta_phi - states[0, IPHI]
        states[:, IPHI] += round(phi_gap / (2 * math.pi)) * 2 * math.pi
        return states, inputs

    def step(self, state: VehicleState, params: MpcParams) -> MpcSolution:
        warm = self._advance_warm(state)
        solution = solve_mpc(
            state, self.track, params, self.horizon, warm=warm, clamp_hint=self._clamp
        )
        if solution.status != STATUS_INFEASIBLE_PARAMS:
            self._warm = (solution.states_array, solution.inputs_array)
            self._clamp = solution.clamp_mask
        return solution
