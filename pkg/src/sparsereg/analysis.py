"""Structural conditions behind the convergence rates, and the error bounds.

Three verifiable ingredients feed the rate predictions: a source
certificate (the penalty subgradient at the reference solution must be
reachable through the adjoint of the operator derivative), injectivity of
the derivative on the support columns, and a growth inequality linking the
penalty gap to the reconstruction error.  This module constructs the
certificates, estimates the growth-inequality coefficients for linear
operators, validates them by sampling, and evaluates the closed-form
error and residual bounds they imply.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .operators import ForwardOperator, operator_norm_sq
from .penalty import PenaltySpec, penalty_value, penalty_subgradient, scalar_bregman_constant

__all__ = [
    "SUPPORT_TOL",
    "SourceCertificate",
    "InjectivityReport",
    "RateConstants",
    "ValidationReport",
    "derivative_matrix",
    "check_source_condition",
    "check_support_injectivity",
    "estimate_rate_constants",
    "validate_rate_inequality",
    "theoretical_bound",
    "check_sparse_rate_conditions",
]

# coefficients smaller than this count as zero when detecting supports;
# reference solutions are constructed exactly, so this only guards float noise
SUPPORT_TOL = 1e-12

_CERT_TOL = 1e-8


@dataclass(frozen=True)
class SourceCertificate:
    """Subgradient at the reference solution written as adjoint of a dual vector.

    source_norm is the norm of the dual vector; it is the constant that
    converts data-space distances into penalty-gap bounds.
    """

    subgradient: np.ndarray
    source_element: np.ndarray
    residual: float
    source_norm: float

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "source_norm": self.source_norm,
            "subgradient": self.subgradient.tolist(),
            "source_element": self.source_element.tolist(),
        }


@dataclass(frozen=True)
class InjectivityReport:
    """Smallest singular value of the derivative restricted to the support."""

    support: np.ndarray
    smallest_singular_value: float
    injectivity_constant: float
    rank_cutoff: float = 0.0

    @property
    def injective(self) -> bool:
        return self.smallest_singular_value > self.rank_cutoff

    def to_dict(self) -> dict:
        return {
            "support": self.support.tolist(),
            "smallest_singular_value": self.smallest_singular_value,
            "injectivity_constant": self.injectivity_constant,
            "rank_cutoff": self.rank_cutoff,
            "injective": self.injective,
        }


@dataclass(frozen=True)
class RateConstants:
    """Coefficients of the growth inequality

        penalty(u) - penalty(ref) >= norm_coeff*||u - ref||^exponent
                                     - residual_coeff*||F(u) - F(ref)||

    valid on the region penalty(u) < penalty_radius and
    ||F(u) - F(ref)|| < residual_radius.
    """

    norm_coeff: float
    residual_coeff: float
    exponent: float
    penalty_radius: float
    residual_radius: float
    validated: bool = False

    def to_dict(self) -> dict:
        return {
            "norm_coeff": self.norm_coeff,
            "residual_coeff": self.residual_coeff,
            "exponent": self.exponent,
            "penalty_radius": self.penalty_radius,
            "residual_radius": self.residual_radius,
            "validated": self.validated,
        }


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of sampling the growth inequality around the reference."""

    n_samples: int
    n_in_region: int
    n_violations: int
    worst_slack: float
    violations: tuple

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "n_in_region": self.n_in_region,
            "n_violations": self.n_violations,
            "worst_slack": self.worst_slack,
            "passed": self.passed,
        }


def derivative_matrix(op: ForwardOperator, at) -> np.ndarray:
    """Dense m-by-n matrix of the operator derivative at a point."""
    at = np.asarray(at, dtype=np.float64)
    cols = np.empty((op.m, op.n))
    basis = np.zeros(op.n)
    for j in range(op.n):
        basis[j] = 1.0
        cols[:, j] = op.derivative_apply(at, basis)
        basis[j] = 0.0
    return cols


def _support(u) -> np.ndarray:
    return np.flatnonzero(np.abs(u) > SUPPORT_TOL)


def check_source_condition(
    op: ForwardOperator, u_dagger, spec: PenaltySpec
) -> Optional[SourceCertificate]:
    """Certificate that the penalty subgradient lies in the adjoint range.

    For exponent q > 1 the subgradient is unique and the dual vector solves
    a plain least-squares problem.  For q = 1 the subgradient is fixed on
    the support and free in [-w, w] elsewhere; the free part is completed
    with least norm among representable choices, which maximizes the margin
    below the weights that the q = 1 rate construction needs.  Returns None
    when no valid certificate exists.
    """
    u_dagger = np.asarray(u_dagger, dtype=np.float64)
    adjoint = derivative_matrix(op, u_dagger).T
    if spec.q > 1.0:
        xi = penalty_subgradient(u_dagger, spec)
        omega, *_ = np.linalg.lstsq(adjoint, xi, rcond=None)
        residual = float(np.linalg.norm(adjoint @ omega - xi))
        if residual > _CERT_TOL * (1.0 + float(np.linalg.norm(xi))):
            return None
        return SourceCertificate(
            subgradient=xi,
            source_element=omega,
            residual=residual,
            source_norm=float(np.linalg.norm(omega)),
        )

    support = _support(u_dagger)
    if support.size == 0:
        zero = np.zeros(op.m)
        return SourceCertificate(
            subgradient=np.zeros(op.n), source_element=zero, residual=0.0, source_norm=0.0
        )
    target = spec.weights[support] * np.sign(u_dagger[support])
    rows = adjoint[support]
    omega, *_ = np.linalg.lstsq(rows, target, rcond=None)
    if np.linalg.norm(rows @ omega - target) > _CERT_TOL * (1.0 + np.linalg.norm(target)):
        return None
    # move within the solution set of the support rows to shrink the
    # off-support entries: omega + null-space correction
    svd_u, svd_s, svd_vt = np.linalg.svd(rows, full_matrices=True)
    cutoff = max(rows.shape) * np.finfo(np.float64).eps * (svd_s[0] if svd_s.size else 0.0)
    rank = int(np.sum(svd_s > cutoff))
    null_basis = svd_vt[rank:].T
    off = np.delete(np.arange(op.n), support)
    if null_basis.shape[1] > 0 and off.size > 0:
        block = adjoint[off] @ null_basis
        correction, *_ = np.linalg.lstsq(block, -adjoint[off] @ omega, rcond=None)
        omega = omega + null_basis @ correction
    xi = adjoint @ omega
    if np.any(np.abs(xi[support] - target) > _CERT_TOL * (1.0 + spec.weights[support])):
        return None
    if off.size > 0 and np.any(np.abs(xi[off]) > spec.weights[off] * (1.0 + 1e-10)):
        return None
    return SourceCertificate(
        subgradient=xi,
        source_element=omega,
        residual=0.0,
        source_norm=float(np.linalg.norm(omega)),
    )


def check_support_injectivity(op: ForwardOperator, u_dagger, support=None) -> InjectivityReport:
    """Smallest singular value of the derivative columns on the support.

    An explicit `support` overrides detection from u_dagger.  An empty
    support reports an infinite constant: there is nothing to invert.
    """
    u_dagger = np.asarray(u_dagger, dtype=np.float64)
    if support is None:
        support = _support(u_dagger)
    else:
        support = np.asarray(support, dtype=np.int64)
    if support.size == 0:
        return InjectivityReport(
            support=support, smallest_singular_value=np.inf, injectivity_constant=np.inf
        )
    cols = derivative_matrix(op, u_dagger)[:, support]
    singular = np.linalg.svd(cols, compute_uv=False)
    sigma = float(singular.min())
    # numerical-rank cutoff, same convention as matrix_rank
    cutoff = float(max(cols.shape) * np.finfo(np.float64).eps * singular.max())
    constant = 1.0 / sigma if sigma > cutoff else np.inf
    return InjectivityReport(
        support=support,
        smallest_singular_value=sigma,
        injectivity_constant=constant,
        rank_cutoff=cutoff,
    )


def _constants_quadratic(op, u_dagger, spec, cert) -> RateConstants:
    # general construction: curvature of the penalty alone gives exponent 2,
    # valid while the penalty stays below its reference value plus w_min
    curvature = scalar_bregman_constant(spec.q) * spec.w_min**2
    ref_penalty = penalty_value(u_dagger, spec)
    return RateConstants(
        norm_coeff=curvature / (4.0 * spec.w_min + 3.0 * ref_penalty),
        residual_coeff=cert.source_norm,
        exponent=2.0,
        penalty_radius=ref_penalty + spec.w_min,
        residual_radius=np.inf,
        validated=False,
    )


def _constants_sparse_q(op, u_dagger, spec, cert, residual_radius) -> RateConstants:
    # sparse construction for q > 1: split the error into support and
    # off-support parts; the support part is controlled through the
    # injectivity constant, the off-support part through the penalty gap
    inj = check_support_injectivity(op, u_dagger)
    if inj.support.size == 0:
        c = 0.0  # nothing to invert on an empty support
    elif not inj.injective or not np.isfinite(inj.injectivity_constant):
        raise ValueError("support columns of the derivative are rank-deficient")
    else:
        c = inj.injectivity_constant
    op_norm = np.sqrt(operator_norm_sq(op, u_dagger))
    norm_coeff = spec.w_min / (2.0 * (1.0 + 2.0 * c**spec.q * op_norm**spec.q))
    residual_coeff = cert.source_norm + 4.0 * c**spec.q * residual_radius ** (spec.q - 1.0) * norm_coeff
    return RateConstants(
        norm_coeff=norm_coeff,
        residual_coeff=residual_coeff,
        exponent=spec.q,
        penalty_radius=np.inf,
        residual_radius=residual_radius,
        validated=False,
    )


def _constants_sparse_1(op, u_dagger, spec, cert) -> RateConstants:
    # q = 1 construction: the certificate entries reaching w_min define the
    # columns that must be injective; the margin below w_min elsewhere sets
    # the growth coefficient
    xi = cert.subgradient
    big = np.flatnonzero(np.abs(xi) >= spec.w_min * (1.0 - 1e-12))
    inj = check_support_injectivity(op, u_dagger, support=big)
    if inj.support.size == 0:
        c = 0.0  # nothing to invert when no entry reaches the weight bound
    elif not inj.injective or not np.isfinite(inj.injectivity_constant):
        raise ValueError("certificate columns of the derivative are rank-deficient")
    else:
        c = inj.injectivity_constant
    off = np.delete(np.arange(op.n), big)
    margin_top = float(np.max(np.abs(xi[off]))) if off.size else 0.0
    if margin_top >= spec.w_min:
        raise ValueError(
            "certificate has no margin below the minimal weight off the support"
        )
    op_norm = np.sqrt(operator_norm_sq(op, u_dagger))
    norm_coeff = (spec.w_min - margin_top) / (1.0 + c * op_norm)
    return RateConstants(
        norm_coeff=norm_coeff,
        residual_coeff=cert.source_norm + c * norm_coeff,
        exponent=1.0,
        penalty_radius=np.inf,
        residual_radius=np.inf,
        validated=False,
    )


def validate_rate_inequality(
    op: ForwardOperator,
    u_dagger,
    spec: PenaltySpec,
    constants: RateConstants,
    n_samples: int = 1000,
    radius: float = 0.1,
    seed: int = 0,
) -> ValidationReport:
    """Sample the growth inequality on fixed-radius perturbations.

    Samples outside the validity region are skipped.  Slack below -1e-9
    counts as a violation; the report keeps the first ten as
    (sample index, slack) pairs.
    """
    u_dagger = np.asarray(u_dagger, dtype=np.float64)
    ref_penalty = penalty_value(u_dagger, spec)
    ref_data = op.apply(u_dagger)
    rng = np.random.default_rng(seed)
    checked = 0
    violations = []
    worst = np.inf
    for index in range(n_samples):
        direction = rng.standard_normal(op.n)
        direction /= np.linalg.norm(direction)
        u = u_dagger + radius * direction
        pen = penalty_value(u, spec)
        data_shift = float(np.linalg.norm(op.apply(u) - ref_data))
        if pen >= constants.penalty_radius or data_shift >= constants.residual_radius:
            continue
        checked += 1
        slack = (
            pen
            - ref_penalty
            - constants.norm_coeff * radius**constants.exponent
            + constants.residual_coeff * data_shift
        )
        worst = min(worst, slack)
        if slack < -1e-9 and len(violations) < 10:
            violations.append((index, slack))
    return ValidationReport(
        n_samples=n_samples,
        n_in_region=checked,
        n_violations=len(violations),
        worst_slack=float(worst) if checked else np.inf,
        violations=tuple(violations),
    )


def estimate_rate_constants(
    op: ForwardOperator,
    u_dagger,
    spec: PenaltySpec,
    exponent: float,
    n_samples: int = 1000,
    radius: float = 0.1,
    seed: int = 0,
    residual_radius: float = 1.0,
    validate: bool = True,
) -> RateConstants:
    """Growth-inequality coefficients for a linear operator, by construction.

    exponent selects the construction: 1 needs q = 1 and a sparse
    reference; q in (1, 2] needs a sparse reference; 2 is the general
    quadratic construction for q > 1.  When exponent = q = 2 the sparse
    construction is preferred if the reference is sparse.  The returned
    coefficients are validated on n_samples perturbations unless
    validate=False; violations raise with the offending samples listed.
    """
    if not op.is_linear:
        raise ValueError("rate-constant constructions require a linear operator")
    if n_samples < 100:
        raise ValueError(f"n_samples must be at least 100, got {n_samples}")
    u_dagger = np.asarray(u_dagger, dtype=np.float64)
    cert = check_source_condition(op, u_dagger, spec)
    if cert is None:
        raise ValueError("source condition fails: subgradient not in the adjoint range")
    sparse = _support(u_dagger).size < op.n
    if exponent == 1.0:
        if spec.q != 1.0:
            raise ValueError("exponent 1 requires q = 1")
        constants = _constants_sparse_1(op, u_dagger, spec, cert)
    elif abs(exponent - spec.q) <= 1e-12 and sparse:
        if spec.q <= 1.0:
            raise ValueError("the sparse q-exponent construction requires q > 1")
        constants = _constants_sparse_q(op, u_dagger, spec, cert, residual_radius)
    elif exponent == 2.0 and spec.q > 1.0:
        constants = _constants_quadratic(op, u_dagger, spec, cert)
    else:
        raise ValueError(
            f"unsupported exponent {exponent} for q = {spec.q}"
            + ("" if sparse else " with a non-sparse reference")
        )
    if not validate:
        return constants
    report = validate_rate_inequality(
        op, u_dagger, spec, constants, n_samples=n_samples, radius=radius, seed=seed
    )
    if not report.passed:
        listed = ", ".join(f"#{i}: slack {s:.3e}" for i, s in report.violations)
        raise ValueError(
            f"growth inequality violated on {report.n_violations} of "
            f"{report.n_in_region} in-region samples ({listed})"
        )
    return RateConstants(
        norm_coeff=constants.norm_coeff,
        residual_coeff=constants.residual_coeff,
        exponent=constants.exponent,
        penalty_radius=constants.penalty_radius,
        residual_radius=constants.residual_radius,
        validated=True,
    )


def theoretical_bound(constants: RateConstants, p: int, alpha: float, delta: float):
    """Closed-form error and residual bounds implied by the constants.

    Returns (err_bound, residual_bound) comparable directly to the
    reconstruction error norm and the data residual norm.  For p = 1 the
    bounds require alpha*residual_coeff < 1 and vanish at delta = 0; the
    p = 2 residual bound is the square root of the bound on the squared
    residual.
    """
    if p not in (1, 2):
        raise ValueError(f"data exponent p must be 1 or 2, got {p}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    coupling = alpha * constants.residual_coeff
    if p == 1:
        if coupling >= 1.0:
            raise ValueError(
                f"p = 1 bound needs alpha*residual_coeff < 1, got {coupling:.6g}"
            )
        err_pow = (1.0 + coupling) * delta / (alpha * constants.norm_coeff)
        residual_bound = (1.0 + coupling) * delta / (1.0 - coupling)
    else:
        err_pow = (delta**2 + coupling * delta + 0.5 * coupling**2) / (
            alpha * constants.norm_coeff
        )
        residual_bound = np.sqrt(2.0 * delta**2 + 2.0 * coupling * delta + coupling**2)
    return float(err_pow ** (1.0 / constants.exponent)), float(residual_bound)


def check_sparse_rate_conditions(
    op: ForwardOperator,
    u_dagger,
    spec: PenaltySpec,
    n_samples: int = 1000,
    radius: float = 0.1,
    seed: int = 0,
) -> dict:
    """Check the hypotheses behind the sparse-solution rates, as a report.

    Linear operators reduce to the source condition plus support
    injectivity (for q = 1 also the off-support margin, with the penalty
    gap split in half).  Nonlinear operators get a sampled fit of the
    linearization-error inequality: the data-shift coefficient is the
    smallest value covering all samples with the linearization coefficient
    pinned at one.
    """
    u_dagger = np.asarray(u_dagger, dtype=np.float64)
    support = _support(u_dagger)
    report: dict = {
        "linear": bool(op.is_linear),
        "q": spec.q,
        "sparsity": int(support.size),
        "sparse": bool(support.size < op.n),
    }
    cert = check_source_condition(op, u_dagger, spec)
    if cert is None:
        report["source_condition"] = {"passed": False}
    else:
        report["source_condition"] = {
            "passed": True,
            "residual": cert.residual,
            "source_norm": cert.source_norm,
        }
    inj = check_support_injectivity(op, u_dagger)
    report["support_injectivity"] = inj.to_dict()
    report["support_injectivity"]["passed"] = inj.injective
    checks = [report["sparse"], cert is not None, inj.injective]
    if op.is_linear and spec.q == 1.0 and cert is not None:
        off = np.delete(np.arange(op.n), support)
        margin_top = float(np.max(np.abs(cert.subgradient[off]))) if off.size else 0.0
        entry = {
            "passed": margin_top < spec.w_min,
            "max_off_support": margin_top,
            "min_weight": spec.w_min,
            "gap_split": 0.5,
        }
        report["off_support_margin"] = entry
        checks.append(entry["passed"])
    if not op.is_linear:
        rng = np.random.default_rng(seed)
        ref_data = op.apply(u_dagger)
        lin_coeff = 1.0
        needed = 0.0
        finite = True
        for _ in range(n_samples):
            direction = rng.standard_normal(op.n)
            direction /= np.linalg.norm(direction)
            u = u_dagger + radius * direction
            gap = penalty_value(u, spec) - penalty_value(u_dagger, spec)
            shifted = op.apply(u) - ref_data
            lin_err = float(
                np.linalg.norm(shifted - op.derivative_apply(u_dagger, u - u_dagger))
            )
            data_shift = float(np.linalg.norm(shifted))
            if data_shift <= 0.0:
                if gap < lin_coeff * lin_err - 1e-12:
                    finite = False
                continue
            needed = max(needed, (lin_coeff * lin_err - gap) / data_shift)
        entry = {
            "passed": finite,
            "linearization_coeff": lin_coeff,
            "data_shift_coeff": max(needed, 1e-12),
            "n_samples": n_samples,
            "radius": radius,
        }
        report["linearization_inequality"] = entry
        checks.append(finite)
    report["passed"] = bool(all(checks))
    return report
