"""First-order solvers for the penalized data-fit functional.

Minimizes ||F(u) - v||^p + alpha * R(u) for p in {1, 2}, where R is the
weighted lq penalty.  The p = 2 linear path is an accelerated proximal
gradient method kept monotone by restarts; the p = 1 linear path is a
primal-dual iteration handling the nonsmooth data norm; the nonlinear path
wraps the p = 2 solver in a damped Gauss-Newton outer loop.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .operators import ForwardOperator, operator_norm_sq
from .penalty import PenaltySpec, penalty_value, prox

__all__ = [
    "SolverConfig",
    "SolveReport",
    "solve_linear_p2",
    "solve_linear_p1",
    "solve_nonlinear",
]


@dataclass(frozen=True)
class SolverConfig:
    """Data exponent, penalty weight alpha, and iteration controls.

    tol is a relative iterate-change threshold.  inner_max_iter and
    inner_tol control the linearized subproblem solves of the nonlinear
    path and default to the outer values.  step_safety shrinks the step
    below 1/L to absorb the slight underestimate of L by power iteration.
    """

    p: int
    alpha: float
    max_iter: int = 50000
    tol: float = 1e-10
    inner_max_iter: Optional[int] = None
    inner_tol: Optional[float] = None
    step_safety: float = 0.99

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ValueError(f"data exponent p must be 1 or 2, got {self.p}")
        if not (np.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if not (np.isfinite(self.tol) and self.tol > 0.0):
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.inner_max_iter is not None and self.inner_max_iter < 1:
            raise ValueError("inner_max_iter must be at least 1 when given")
        if self.inner_tol is not None and not (
            np.isfinite(self.inner_tol) and self.inner_tol > 0.0
        ):
            raise ValueError("inner_tol must be positive when given")
        if not 0.0 < self.step_safety <= 1.0:
            raise ValueError(f"step_safety must lie in (0, 1], got {self.step_safety}")


@dataclass
class SolveReport:
    """Minimizer with its objective decomposition and iteration diagnostics."""

    minimizer: np.ndarray
    objective: float
    residual_norm: float
    penalty_value: float
    iterations: int
    converged: bool
    objective_trace: list = field(repr=False, default_factory=list)


def _report(op, data, spec, cfg, u, iterations, converged, trace) -> SolveReport:
    resid = float(np.linalg.norm(op.apply(u) - data))
    pen = penalty_value(u, spec)
    return SolveReport(
        minimizer=u,
        objective=resid**cfg.p + cfg.alpha * pen,
        residual_norm=resid,
        penalty_value=pen,
        iterations=iterations,
        converged=converged,
        objective_trace=trace,
    )


def _check_linear(op: ForwardOperator, data, p_expected: int, cfg: SolverConfig):
    if not op.is_linear:
        raise ValueError("this solver handles linear operators only")
    if cfg.p != p_expected:
        raise ValueError(f"config requests p={cfg.p}, this solver handles p={p_expected}")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 1 or data.size != op.m:
        raise ValueError(f"expected data vector of length {op.m}, got shape {data.shape}")
    return data


def solve_linear_p2(
    op: ForwardOperator,
    data,
    spec: PenaltySpec,
    cfg: SolverConfig,
    u0=None,
) -> SolveReport:
    """Minimize ||Fu - v||^2 + alpha*R(u) for linear F.

    Accelerated proximal gradient iteration on the equivalent half-scaled
    objective, so the prox threshold per step is step*alpha/2.  A monotone
    restart discards the accelerated candidate whenever it would increase
    the objective, falling back to a plain proximal step, which keeps the
    recorded objective trace nonincreasing.
    """
    data = _check_linear(op, data, 2, cfg)
    if spec.n != op.n:
        raise ValueError(f"penalty has {spec.n} weights but operator expects {op.n}")
    lip = operator_norm_sq(op)
    x = np.zeros(op.n) if u0 is None else np.asarray(u0, dtype=np.float64).copy()

    def objective(u):
        r = op.apply(u) - data
        return float(r @ r) + cfg.alpha * penalty_value(u, spec)

    obj = objective(x)
    trace = [obj]
    if lip <= 0.0:
        # zero operator: the penalty alone drives every coefficient to zero
        zero = np.zeros(op.n)
        return _report(op, data, spec, cfg, zero, 0, True, trace + [objective(zero)])
    step = cfg.step_safety / lip
    tau = step * cfg.alpha / 2.0

    def forward_backward(u):
        grad = op.derivative_adjoint_apply(u, op.apply(u) - data)
        return prox(u - step * grad, tau, spec)

    y = x.copy()
    momentum = 1.0
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iter + 1):
        cand = forward_backward(y)
        cand_obj = objective(cand)
        if cand_obj > obj:
            # restart: the plain step from x cannot increase the objective
            momentum = 1.0
            cand = forward_backward(x)
            cand_obj = objective(cand)
            if cand_obj > obj:
                cand, cand_obj = x, obj
        momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
        y = cand + ((momentum - 1.0) / momentum_next) * (cand - x)
        shift = float(np.linalg.norm(cand - x))
        x, obj, momentum = cand, cand_obj, momentum_next
        trace.append(obj)
        if shift <= cfg.tol * (1.0 + float(np.linalg.norm(x))):
            converged = True
            break
    return _report(op, data, spec, cfg, x, iterations, converged, trace)


def solve_linear_p1(
    op: ForwardOperator,
    data,
    spec: PenaltySpec,
    cfg: SolverConfig,
    u0=None,
) -> SolveReport:
    """Minimize ||Ku - v|| + alpha*R(u) for linear K.

    Primal-dual iteration on the saddle form max over the dual unit ball:
    the dual ascent step shifts by the data and projects back onto the
    ball, the primal descent step applies the penalty prox.  Step sizes
    satisfy sigma*tau*||K||^2 <= 1.  Stops when both iterates change less
    than tol in relative terms.
    """
    data = _check_linear(op, data, 1, cfg)
    if spec.n != op.n:
        raise ValueError(f"penalty has {spec.n} weights but operator expects {op.n}")
    lip = operator_norm_sq(op)

    def objective(u):
        return float(np.linalg.norm(op.apply(u) - data)) + cfg.alpha * penalty_value(u, spec)

    x = np.zeros(op.n) if u0 is None else np.asarray(u0, dtype=np.float64).copy()
    trace = [objective(x)]
    if lip <= 0.0:
        zero = np.zeros(op.n)
        return _report(op, data, spec, cfg, zero, 0, True, trace + [objective(zero)])
    sigma = tau = cfg.step_safety / np.sqrt(lip)
    y = np.zeros(op.m)
    x_bar = x.copy()
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iter + 1):
        y_next = y + sigma * (op.apply(x_bar) - data)
        norm_y = float(np.linalg.norm(y_next))
        if norm_y > 1.0:
            y_next = y_next / norm_y
        x_next = prox(x - tau * op.derivative_adjoint_apply(x, y_next), tau * cfg.alpha, spec)
        x_bar = 2.0 * x_next - x
        primal_shift = float(np.linalg.norm(x_next - x))
        dual_shift = float(np.linalg.norm(y_next - y))
        x, y = x_next, y_next
        trace.append(objective(x))
        if primal_shift <= cfg.tol * (1.0 + float(np.linalg.norm(x))) and dual_shift <= cfg.tol * (
            1.0 + float(np.linalg.norm(y))
        ):
            converged = True
            break
    return _report(op, data, spec, cfg, x, iterations, converged, trace)


class _LinearizedOperator(ForwardOperator):
    """Derivative of a nonlinear operator at a fixed point, as a linear map."""

    def __init__(self, op: ForwardOperator, at: np.ndarray):
        self._op = op
        self._at = at
        self._n = op.n
        self._m = op.m
        self._linear = True

    def apply(self, u):
        return self._op.derivative_apply(self._at, u)

    def derivative_apply(self, u, h):
        return self._op.derivative_apply(self._at, h)

    def derivative_adjoint_apply(self, u, y):
        return self._op.derivative_adjoint_apply(self._at, y)


def solve_nonlinear(
    op: ForwardOperator,
    data,
    spec: PenaltySpec,
    cfg: SolverConfig,
    u0=None,
) -> SolveReport:
    """Minimize ||F(u) - v||^2 + alpha*R(u) for differentiable F.

    Gauss-Newton outer loop: linearize F at the current iterate, solve the
    resulting linear p=2 problem warm-started there, then damp the step by
    halving (at most 20 times) until the true objective does not increase.
    Inner solves use inner_max_iter/inner_tol when set.
    """
    if cfg.p != 2:
        raise ValueError("the nonlinear path supports p = 2 only")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 1 or data.size != op.m:
        raise ValueError(f"expected data vector of length {op.m}, got shape {data.shape}")
    if spec.n != op.n:
        raise ValueError(f"penalty has {spec.n} weights but operator expects {op.n}")
    inner_cfg = SolverConfig(
        p=2,
        alpha=cfg.alpha,
        max_iter=cfg.inner_max_iter if cfg.inner_max_iter is not None else cfg.max_iter,
        tol=cfg.inner_tol if cfg.inner_tol is not None else cfg.tol,
        step_safety=cfg.step_safety,
    )

    def objective(u):
        r = op.apply(u) - data
        return float(r @ r) + cfg.alpha * penalty_value(u, spec)

    u = np.zeros(op.n) if u0 is None else np.asarray(u0, dtype=np.float64).copy()
    obj = objective(u)
    trace = [obj]
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iter + 1):
        linear = _LinearizedOperator(op, u)
        shifted_data = data - op.apply(u) + linear.apply(u)
        inner = solve_linear_p2(linear, shifted_data, spec, inner_cfg, u0=u)
        step = inner.minimizer - u
        cand = u + step
        cand_obj = objective(cand)
        halvings = 0
        while cand_obj > obj and halvings < 20:
            step *= 0.5
            cand = u + step
            cand_obj = objective(cand)
            halvings += 1
        if cand_obj > obj:
            # no descent direction left at this linearization: stop here
            converged = True
            break
        shift = float(np.linalg.norm(cand - u))
        u, obj = cand, cand_obj
        trace.append(obj)
        if shift <= cfg.tol * (1.0 + float(np.linalg.norm(u))):
            converged = True
            break
    return _report(op, data, spec, cfg, u, iterations, converged, trace)
