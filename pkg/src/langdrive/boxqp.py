"""Box-constrained QP: minimize 0.5 x'Hx + g'x + const  s.t.  lb <= x <= ub.

Projected Newton with an active-set split: clamped coordinates are frozen
at their bounds, the free block takes a Newton step (Cholesky), and a
projected Armijo line search keeps the objective monotonically
non-increasing. The penalty-heavy problems assembled by the controller are
badly conditioned for first-order projected gradient, which is why the
Newton scaling is used; the contract (monotone objective, KKT residual at
optimum) is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"


@dataclass
class BoxQp:
    H: np.ndarray
    g: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    const: float = 0.0
    validate: bool = True

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        if self.validate:
            if not np.allclose(self.H, self.H.T, atol=1e-9):
                raise ValueError("H must be symmetric")
            if np.any(self.lb > self.ub):
                raise ValueError("lb must be <= ub elementwise")

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.H @ x + self.g @ x + self.const)


@dataclass
class QpResult:
    x: np.ndarray
    objective: float
    iterations: int
    status: str
    kkt_residual: float
    objective_trace: list[float] = field(default_factory=list)
    clamped: np.ndarray | None = None


def kkt_residual(qp: BoxQp, x: np.ndarray) -> float:
    """Infinity norm of the projected-gradient fixed-point residual."""
    grad = qp.H @ x + qp.g
    return float(np.max(np.abs(x - np.clip(x - grad, qp.lb, qp.ub))))


def solve_box_qp(
    qp: BoxQp,
    x0: np.ndarray | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
    clamp_hint: np.ndarray | None = None,
) -> QpResult:
    n = len(qp.g)
    if x0 is not None:
        x = np.clip(np.asarray(x0, dtype=float), qp.lb, qp.ub)
    else:
        lo = np.where(np.isfinite(qp.lb), qp.lb, 0.0)
        hi = np.where(np.isfinite(qp.ub), qp.ub, 0.0)
        x = np.clip(0.5 * (lo + hi), qp.lb, qp.ub)

    def newton_direction(free: np.ndarray, grad: np.ndarray) -> np.ndarray:
        h_ff = qp.H[np.ix_(free, free)]
        reg = 0.0
        for _ in range(8):
            try:
                factor = sla.cho_factor(
                    h_ff + reg * np.eye(h_ff.shape[0]) if reg else h_ff,
                    lower=True,
                    check_finite=False,
                )
                break
            except np.linalg.LinAlgError:
                reg = max(reg * 10.0, 1e-10 * (np.trace(h_ff) / max(1, h_ff.shape[0]) + 1.0))
        else:
            raise np.linalg.LinAlgError("Hessian block not positive definite")
        d = np.zeros(n)
        d[free] = sla.cho_solve(factor, -grad[free], check_finite=False)
        return d

    def arc_search(x: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Exact minimization of the quadratic along the projection arc
        t -> clip(x + t d): piecewise quadratic, marched breakpoint by
        breakpoint. Never increases the objective."""
        xt = x.copy()
        d = d.copy()
        hx_g = qp.H @ xt + qp.g
        for _ in range(2 * n):
            moving = d != 0.0
            if not np.any(moving):
                break
            with np.errstate(divide="ignore", invalid="ignore"):
                t_hi = np.where(d > 0, (qp.ub - xt) / d, np.inf)
                t_lo = np.where(d < 0, (qp.lb - xt) / d, np.inf)
            t_cross = np.where(moving, np.minimum(t_hi, t_lo), np.inf)
            t_cross = np.maximum(t_cross, 0.0)
            t1 = float(np.min(t_cross))
            slope = float(d @ hx_g)
            if slope >= -1e-18:
                break
            hd = qp.H @ d
            curv = float(d @ hd)
            t_star = -slope / curv if curv > 0 else np.inf
            if t_star <= t1:
                xt = np.clip(xt + t_star * d, qp.lb, qp.ub)
                break
            if not np.isfinite(t1):
                # unbounded segment with negative slope cannot happen for
                # a PSD objective unless curv == 0; bail out conservatively
                xt = np.clip(xt + t_star * d, qp.lb, qp.ub) if np.isfinite(t_star) else xt
                break
            xt = xt + t1 * d
            hx_g = hx_g + t1 * hd
            crossed = t_cross <= t1 + 1e-15
            xt[crossed] = np.clip(xt[crossed], qp.lb[crossed], qp.ub[crossed])
            d[crossed] = 0.0
        return np.clip(xt, qp.lb, qp.ub)

    value = qp.objective(x)
    trace = [value]
    iterations = 0
    last_clamped = None
    for iterations in range(1, max_iter + 1):
        grad = qp.H @ x + qp.g
        residual = kkt_residual(qp, x)
        at_bound = (x <= qp.lb + 1e-12) | (x >= qp.ub - 1e-12)
        clamped = ((x <= qp.lb + 1e-12) & (grad > 0)) | ((x >= qp.ub - 1e-12) & (grad < 0))
        if iterations == 1 and clamp_hint is not None and len(clamp_hint) == n:
            # seed with the caller's previous active set; wrong guesses are
            # dropped on the next iteration by the gradient test
            clamped = clamped | (clamp_hint & at_bound)
        last_clamped = clamped
        if residual <= tol:
            return QpResult(x, value, iterations - 1, STATUS_OPTIMAL, residual, trace, clamped)
        if np.all(clamped):
            return QpResult(x, value, iterations - 1, STATUS_OPTIMAL, residual, trace, clamped)

        # grow the clamp set until the subspace step no longer exits the box
        # at a variable already sitting on its bound (a couple of passes
        # suffice; the arc search absorbs any residual blocking)
        direction = None
        for _ in range(2):
            free = ~clamped
            if not np.any(free):
                break
            direction = newton_direction(free, grad)
            blocked = free & (
                ((x <= qp.lb + 1e-12) & (direction < 0))
                | ((x >= qp.ub - 1e-12) & (direction > 0))
            )
            if not np.any(blocked):
                break
            clamped |= blocked
        last_clamped = clamped
        if direction is None or not np.any(~clamped):
            return QpResult(x, value, iterations - 1, STATUS_OPTIMAL, residual, trace, clamped)

        candidate = arc_search(x, direction)
        cand_value = qp.objective(candidate)
        if cand_value > value + 1e-12 * (1.0 + abs(value)):
            residual = kkt_residual(qp, x)
            status = STATUS_OPTIMAL if residual <= tol else STATUS_MAX_ITER
            return QpResult(x, value, iterations, status, residual, trace, clamped)
        x = candidate
        value = cand_value
        trace.append(value)

    residual = kkt_residual(qp, x)
    status = STATUS_OPTIMAL if residual <= tol else STATUS_MAX_ITER
    return QpResult(x, value, iterations, status, residual, trace, last_clamped)
