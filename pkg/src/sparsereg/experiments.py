"""Benchmark problems, noise sweeps, and empirical convergence rates.

A problem instance couples a forward operator with an exactly known
reference solution.  Sweeps rerun the solver over a decreasing noise grid
with the regularization weight tied to the noise level, then fit the
log-log slope of error against noise, which is the quantity the rate
theory predicts.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import (
    RateConstants,
    SourceCertificate,
    check_source_condition,
    check_support_injectivity,
    theoretical_bound,
)
from .fileio import atomic_write_text
from .operators import (
    ForwardOperator,
    load_matrix_csv,
    make_convolution_linear,
    make_dense_linear,
    make_diagonal_linear,
    make_toy_nonlinear,
)
from .penalty import PenaltySpec, penalty_subgradient
from .solver import SolverConfig, solve_linear_p1, solve_linear_p2, solve_nonlinear

__all__ = [
    "PROBLEM_KINDS",
    "ProblemInstance",
    "SweepRow",
    "RateEstimate",
    "SweepResult",
    "RecoveryReport",
    "generate_problem",
    "generate_source_problem",
    "add_noise",
    "alpha_rule",
    "fit_rate",
    "solve_instance",
    "run_sweep",
    "exact_recovery_test",
    "write_sweep_csv",
    "write_rate_json",
]

PROBLEM_KINDS = ("diagonal", "convolution", "random-dense", "toy-nonlinear", "csv")

CSV_HEADER = "delta,alpha,trial,error_norm,residual_norm,err_bound,residual_bound,iterations,converged"


@dataclass
class ProblemInstance:
    """Forward operator with an exactly known reference solution."""

    operator: ForwardOperator
    u_dagger: np.ndarray
    clean_data: np.ndarray
    spec: PenaltySpec
    p: int
    sparsity: int
    seed: int
    kind: str = ""
    certificate: Optional[SourceCertificate] = None


@dataclass(frozen=True)
class SweepRow:
    delta: float
    alpha: float
    trial: int
    error_norm: float
    residual_norm: float
    err_bound: float
    residual_bound: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class RateEstimate:
    """Least-squares slope of log(error) against log(noise level)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
        }


@dataclass
class SweepResult:
    rows: list
    rate: RateEstimate
    constants: Optional[RateConstants] = None


@dataclass(frozen=True)
class RecoveryReport:
    """Outcome of the noise-free recovery check for the p = 1 functional."""

    status: str  # "pass", "fail", or "inapplicable"
    error: float
    threshold: float

    def to_dict(self) -> dict:
        return {"status": self.status, "error": self.error, "threshold": self.threshold}


def _draw_reference(rng, n: int, sparsity: int, positions=None) -> np.ndarray:
    u = np.zeros(n)
    if sparsity > 0:
        if positions is None:
            positions = rng.choice(n, size=sparsity, replace=False)
        else:
            positions = np.asarray(positions, dtype=np.intp)
            if positions.ndim != 1 or positions.size != sparsity:
                raise ValueError(
                    f"positions must list exactly sparsity={sparsity} indices"
                )
            if np.unique(positions).size != positions.size:
                raise ValueError("positions must not repeat")
            if positions.size and (positions.min() < 0 or positions.max() >= n):
                raise ValueError(f"positions must lie in [0, {n})")
        magnitudes = rng.uniform(0.5, 1.5, size=sparsity)
        signs = np.where(rng.random(sparsity) < 0.5, -1.0, 1.0)
        u[positions] = signs * magnitudes
    return u


def _build_operator(kind, n, m, rng, decay, kernel_width, eps, matrix_path):
    if kind == "diagonal":
        return make_diagonal_linear((np.arange(n) + 1.0) ** (-decay))
    if kind == "convolution":
        radius = int(np.ceil(3.0 * kernel_width))
        offsets = np.arange(-radius, radius + 1, dtype=np.float64)
        kernel = np.exp(-0.5 * (offsets / kernel_width) ** 2)
        kernel /= kernel.sum()
        if kernel.size > n:
            raise ValueError(
                f"kernel of width {kernel_width} needs {kernel.size} taps, more than n={n}"
            )
        return make_convolution_linear(kernel, n)
    if kind == "random-dense":
        return make_dense_linear(rng.standard_normal((m, n)) / np.sqrt(m))
    if kind == "toy-nonlinear":
        a = rng.standard_normal((m, n)) / np.sqrt(m)
        b = rng.standard_normal((m, n)) / np.sqrt(m)
        return make_toy_nonlinear(a, b, eps)
    if kind == "csv":
        if matrix_path is None:
            raise ValueError("kind 'csv' requires matrix_path")
        return make_dense_linear(load_matrix_csv(matrix_path))
    raise ValueError(f"unknown problem kind {kind!r}; expected one of {PROBLEM_KINDS}")


def generate_problem(
    kind: str,
    n: int,
    m: Optional[int] = None,
    sparsity: int = 3,
    q: float = 1.0,
    p: int = 2,
    seed: int = 0,
    weight: float = 1.0,
    decay: float = 1.0,
    kernel_width: float = 3.0,
    eps: float = 1e-3,
    matrix_path=None,
    positions=None,
    weights=None,
    validate: bool = True,
) -> ProblemInstance:
    """Build a problem instance with a seeded sparse reference solution.

    Reference coefficients have magnitudes in [0.5, 1.5] with random signs
    at positions drawn without replacement, or at explicitly given
    positions (len == sparsity) when reproducible placement matters:
    where the support sits relative to the operator's spectrum decides
    which noise levels keep it above the shrinkage threshold, so rate
    studies need it pinned.  With validate=True the instance must pass
    the support-injectivity and source-condition checks; failing draws
    are regenerated deterministically up to ten times before giving up.
    """
    if sparsity > n:
        raise ValueError(f"sparsity {sparsity} exceeds dimension {n}")
    if m is None:
        m = n
    if weights is None:
        spec = PenaltySpec.uniform(q, weight, n)
    else:
        spec = PenaltySpec(q, np.asarray(weights, dtype=np.float64))
        if spec.n != n:
            raise ValueError(f"weights must have length n={n}, got {spec.n}")
    last_failure = "no attempt made"
    for attempt in range(10):
        rng = np.random.default_rng([seed, attempt])
        op = _build_operator(kind, n, m, rng, decay, kernel_width, eps, matrix_path)
        u = _draw_reference(rng, op.n, sparsity, positions)
        instance = ProblemInstance(
            operator=op,
            u_dagger=u,
            clean_data=op.apply(u),
            spec=spec,
            p=p,
            sparsity=sparsity,
            seed=seed,
            kind=kind,
        )
        if not validate:
            return instance
        inj = check_support_injectivity(op, u)
        if sparsity > 0 and not inj.injective:
            last_failure = "support columns of the derivative are rank-deficient"
            continue
        cert = check_source_condition(op, u, spec)
        if cert is None:
            last_failure = "source condition fails at the reference solution"
            continue
        instance.certificate = cert
        return instance
    raise ValueError(
        f"could not generate a valid {kind!r} instance with n={n}, m={m}, "
        f"sparsity={sparsity}, q={q} after 10 attempts: {last_failure}"
    )


def generate_source_problem(
    n: int = 64,
    q: float = 1.5,
    p: int = 2,
    seed: int = 0,
    weight: float = 1.0,
    decay: float = 1.0,
    source_decay: float = 2.0,
) -> ProblemInstance:
    """Non-sparse instance built to satisfy the source condition exactly.

    Starts from a decaying dual vector with seeded random signs, pushes it
    through the operator adjoint to get the subgradient, then inverts the
    q > 1 subgradient formula coefficientwise to obtain the reference
    solution.  Every coefficient is nonzero, so this probes the general
    quadratic-growth rate rather than the sparse ones.
    """
    if not 1.0 < q <= 2.0:
        raise ValueError(f"the subgradient inversion needs q > 1, got {q}")
    singular_values = (np.arange(n) + 1.0) ** (-decay)
    op = make_diagonal_linear(singular_values)
    spec = PenaltySpec.uniform(q, weight, n)
    rng = np.random.default_rng(seed)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    omega = signs * (np.arange(n) + 1.0) ** (-source_decay)
    xi = singular_values * omega
    u = np.sign(xi) * (np.abs(xi) / (q * spec.weights)) ** (1.0 / (q - 1.0))
    instance = ProblemInstance(
        operator=op,
        u_dagger=u,
        clean_data=op.apply(u),
        spec=spec,
        p=p,
        sparsity=int(np.count_nonzero(u)),
        seed=seed,
        kind="diagonal",
    )
    instance.certificate = SourceCertificate(
        subgradient=xi,
        source_element=omega,
        residual=float(np.linalg.norm(penalty_subgradient(u, spec) - xi)),
        source_norm=float(np.linalg.norm(omega)),
    )
    return instance


def add_noise(clean, delta: float, seed) -> np.ndarray:
    """Perturb the data by a seeded Gaussian draw of norm exactly delta."""
    clean = np.asarray(clean, dtype=np.float64)
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if delta == 0.0:
        return clean.copy()
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(clean.size)
    noise *= delta / np.linalg.norm(noise)
    return clean + noise


def alpha_rule(delta: float, p: int, c: float = 1.0) -> float:
    """Regularization weight c * delta^(p-1); constant in delta for p = 1."""
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if c <= 0.0:
        raise ValueError(f"c must be positive, got {c}")
    return c * delta ** (p - 1)


def fit_rate(deltas, errors) -> RateEstimate:
    """Least-squares fit of log(error) against log(delta)."""
    deltas = np.asarray(deltas, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if deltas.size != errors.size or deltas.size < 2:
        raise ValueError("rate fit needs matching delta/error sequences of length >= 2")
    if np.any(deltas <= 0.0) or np.any(errors <= 0.0):
        raise ValueError("rate fit needs positive deltas and errors")
    x = np.log(deltas)
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    total = float(np.sum((y - y.mean()) ** 2))
    leftover = float(np.sum((y - fitted) ** 2))
    r_squared = 1.0 if total == 0.0 else max(0.0, 1.0 - leftover / total)
    return RateEstimate(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r_squared),
        n_points=int(deltas.size),
    )


def solve_instance(
    instance: ProblemInstance,
    data,
    alpha: float,
    tol: float = 1e-10,
    max_iter: int = 50000,
):
    """Solve one regularized problem, dispatching on p and linearity."""
    cfg = SolverConfig(p=instance.p, alpha=alpha, max_iter=max_iter, tol=tol)
    if not instance.operator.is_linear:
        return solve_nonlinear(instance.operator, data, instance.spec, cfg)
    if instance.p == 1:
        return solve_linear_p1(instance.operator, data, instance.spec, cfg)
    return solve_linear_p2(instance.operator, data, instance.spec, cfg)


def run_sweep(
    instance: ProblemInstance,
    deltas: Sequence[float],
    c_alpha: float = 1.0,
    trials_per_delta: int = 5,
    seed: int = 0,
    constants: Optional[RateConstants] = None,
    solver_tol: float = 1e-10,
    solver_max_iter: int = 50000,
    threads: int = 1,
) -> SweepResult:
    """Noise sweep with the regularization weight tied to the noise level.

    Runs trials_per_delta seeded noise draws per level; each cell derives
    its own seed from (seed, level index, trial index) so serial and
    threaded runs produce identical rows.  The rate is fitted on per-level
    mean errors, skipping levels where the solver stopping threshold is
    within 1% of the measured error (those measurements would reflect the
    optimizer floor, not the regularization error).  Requires at least
    four usable levels.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 2 or any(d <= 0.0 for d in deltas):
        raise ValueError("deltas must be a decreasing positive sequence")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    if trials_per_delta < 1:
        raise ValueError("trials_per_delta must be at least 1")
    if constants is not None and instance.p == 1 and c_alpha * constants.residual_coeff >= 1.0:
        raise ValueError(
            "p = 1 sweep needs c_alpha below the reciprocal of the residual coefficient"
        )

    def run_cell(level: int, trial: int):
        delta = deltas[level]
        alpha = alpha_rule(delta, instance.p, c_alpha)
        cell_seed = np.random.SeedSequence([seed, level, trial])
        noisy = add_noise(instance.clean_data, delta, cell_seed)
        tol = min(solver_tol, 1e-4 * delta)
        report = solve_instance(instance, noisy, alpha, tol, solver_max_iter)
        if constants is not None:
            err_bound, residual_bound = theoretical_bound(
                constants, instance.p, alpha, delta
            )
        else:
            err_bound = residual_bound = float("nan")
        floor = tol * (1.0 + float(np.linalg.norm(report.minimizer)))
        row = SweepRow(
            delta=delta,
            alpha=alpha,
            trial=trial,
            error_norm=float(np.linalg.norm(report.minimizer - instance.u_dagger)),
            residual_norm=report.residual_norm,
            err_bound=err_bound,
            residual_bound=residual_bound,
            iterations=report.iterations,
            converged=report.converged,
        )
        return row, floor

    cells = [(i, t) for i in range(len(deltas)) for t in range(trials_per_delta)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda c: run_cell(*c), cells))
    else:
        outcomes = [run_cell(i, t) for i, t in cells]

    rows = [row for row, _ in outcomes]
    fit_deltas = []
    fit_errors = []
    for level, delta in enumerate(deltas):
        group = outcomes[level * trials_per_delta : (level + 1) * trials_per_delta]
        if not all(row.converged for row, _ in group):
            continue
        mean_error = float(np.mean([row.error_norm for row, _ in group]))
        worst_floor = max(floor for _, floor in group)
        if mean_error <= 0.0 or worst_floor > 0.01 * mean_error:
            continue
        fit_deltas.append(delta)
        fit_errors.append(mean_error)
    if len(fit_deltas) < 4:
        raise ValueError(
            f"rate fit needs at least 4 usable noise levels, got {len(fit_deltas)}"
        )
    rate = fit_rate(fit_deltas, fit_errors)
    return SweepResult(rows=rows, rate=rate, constants=constants)


def exact_recovery_test(
    instance: ProblemInstance,
    alpha: float,
    solver_max_iter: int = 200000,
    solver_tol: float = 1e-10,
) -> RecoveryReport:
    """Noise-free p = 1 solve; passes when the reference is recovered.

    Inapplicable when alpha reaches the reciprocal of the certificate's
    source norm, the regime where recovery is no longer guaranteed.
    """
    if instance.p != 1:
        raise ValueError("exact recovery applies to p = 1 instances only")
    threshold = 1e-6 * (1.0 + float(np.linalg.norm(instance.u_dagger)))
    if instance.certificate is not None and instance.certificate.source_norm > 0.0:
        if alpha >= 1.0 / instance.certificate.source_norm:
            return RecoveryReport(status="inapplicable", error=float("nan"), threshold=threshold)
    cfg = SolverConfig(p=1, alpha=alpha, max_iter=solver_max_iter, tol=solver_tol)
    report = solve_linear_p1(instance.operator, instance.clean_data, instance.spec, cfg)
    error = float(np.linalg.norm(report.minimizer - instance.u_dagger))
    return RecoveryReport(
        status="pass" if error <= threshold else "fail",
        error=error,
        threshold=threshold,
    )


def write_sweep_csv(result: SweepResult, path) -> None:
    """Write sweep rows in the fixed column order with round-trip floats."""
    lines = [CSV_HEADER]
    for row in result.rows:
        lines.append(
            ",".join(
                [
                    repr(float(row.delta)),
                    repr(float(row.alpha)),
                    str(int(row.trial)),
                    repr(float(row.error_norm)),
                    repr(float(row.residual_norm)),
                    repr(float(row.err_bound)),
                    repr(float(row.residual_bound)),
                    str(int(row.iterations)),
                    "1" if row.converged else "0",
                ]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_rate_json(result: SweepResult, path, conditions: Optional[dict] = None) -> None:
    """JSON sidecar with the fitted rate, constants, and condition reports."""
    payload = {
        "rate": result.rate.to_dict(),
        "constants": result.constants.to_dict() if result.constants else None,
        "conditions": conditions,
        "n_rows": len(result.rows),
    }
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
