"""Condition certificates, rate constants, and theoretical bounds."""

import numpy as np
import pytest

from sparsereg.analysis import (
    RateConstants,
    check_source_condition,
    check_sparse_rate_conditions,
    check_support_injectivity,
    derivative_matrix,
    estimate_rate_constants,
    theoretical_bound,
    validate_rate_inequality,
)
from sparsereg.operators import make_dense_linear, make_diagonal_linear, make_toy_nonlinear
from sparsereg.penalty import PenaltySpec


def test_source_condition_identity_q2():
    op = make_dense_linear(np.eye(2))
    spec = PenaltySpec.uniform(2.0, 1.0, 2)
    cert = check_source_condition(op, np.array([1.0, 0.0]), spec)
    assert cert is not None
    np.testing.assert_allclose(cert.subgradient, [2.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(cert.source_element, [2.0, 0.0], atol=1e-12)
    assert cert.residual <= 1e-12
    assert cert.source_norm == pytest.approx(2.0)


def test_source_condition_diagonal_q1_least_norm():
    # off-support completion is free; least-norm picks 0 there, so the
    # source element is (1, 0) rather than any (1, 2c)
    op = make_diagonal_linear(np.array([1.0, 0.5]))
    spec = PenaltySpec.uniform(1.0, 1.0, 2)
    cert = check_source_condition(op, np.array([1.0, 0.0]), spec)
    assert cert is not None
    np.testing.assert_allclose(cert.subgradient, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(cert.source_element, [1.0, 0.0], atol=1e-12)
    assert cert.source_norm == pytest.approx(1.0)


def test_source_condition_zero_column_fails():
    mat = np.array([[1.0, 0.0], [0.0, 0.0]])
    op = make_dense_linear(mat)
    spec = PenaltySpec.uniform(1.5, 1.0, 2)
    # support touches the zero column: the subgradient coordinate there is
    # nonzero but unreachable through the adjoint
    assert check_source_condition(op, np.array([1.0, 1.0]), spec) is None


def test_source_certificate_round_trip_inequality():
    rng = np.random.default_rng(0)
    op = make_dense_linear(rng.standard_normal((24, 16)))
    spec = PenaltySpec.uniform(1.5, 1.0, 16)
    u = np.zeros(16)
    u[[1, 5, 9]] = [1.0, -0.5, 0.8]
    cert = check_source_condition(op, u, spec)
    assert cert is not None
    for _ in range(1000):
        direction = rng.standard_normal(16)
        lhs = abs(float(np.dot(cert.subgradient, direction)))
        rhs = cert.source_norm * float(
            np.linalg.norm(op.derivative_apply(u, direction))
        )
        assert lhs <= rhs * (1.0 + 1e-10) + 1e-12


def test_injectivity_golden():
    ident = make_dense_linear(np.eye(4))
    rep = check_support_injectivity(ident, np.array([1.0, 0.0, 2.0, 0.0]))
    assert rep.smallest_singular_value == pytest.approx(1.0)
    assert rep.injective

    op = make_diagonal_linear(np.array([1.0, 0.5, 0.25]))
    rep = check_support_injectivity(op, np.array([1.0, 0.0, -1.0]))
    assert rep.smallest_singular_value == pytest.approx(0.25)
    assert rep.injectivity_constant == pytest.approx(4.0)
    np.testing.assert_array_equal(rep.support, [0, 2])


def test_injectivity_matches_svd_oracle():
    rng = np.random.default_rng(1)
    mat = rng.standard_normal((32, 64))
    op = make_dense_linear(mat)
    u = np.zeros(64)
    picks = rng.choice(64, size=5, replace=False)
    u[picks] = rng.uniform(0.5, 1.5, 5)
    rep = check_support_injectivity(op, u)
    want = float(np.linalg.svd(mat[:, np.sort(picks)], compute_uv=False).min())
    assert rep.smallest_singular_value == pytest.approx(want, abs=1e-8)
    assert rep.injective


def test_injectivity_rank_deficient_and_empty():
    mat = np.zeros((4, 3))
    mat[:, 0] = [1.0, 2.0, 0.0, 1.0]
    mat[:, 1] = mat[:, 0]
    mat[:, 2] = [0.0, 1.0, 1.0, 0.0]
    op = make_dense_linear(mat)
    rep = check_support_injectivity(op, np.array([1.0, 1.0, 0.0]))
    assert not rep.injective
    assert not np.isfinite(rep.injectivity_constant)

    empty = check_support_injectivity(op, np.zeros(3))
    assert empty.injective
    assert empty.smallest_singular_value == np.inf


def test_derivative_matrix_assembly():
    rng = np.random.default_rng(2)
    mat = rng.standard_normal((5, 4))
    op = make_dense_linear(mat)
    np.testing.assert_allclose(derivative_matrix(op, np.zeros(4)), mat, atol=1e-12)
    a = rng.standard_normal((5, 4))
    b = rng.standard_normal((5, 4))
    nl = make_toy_nonlinear(a, b, 0.2)
    u = rng.standard_normal(4)
    want = a + 0.2 * 2.0 * b * u[np.newaxis, :]
    np.testing.assert_allclose(derivative_matrix(nl, u), want, atol=1e-12)


def test_constants_identity_q2_zero_reference():
    op = make_dense_linear(np.eye(8))
    spec = PenaltySpec.uniform(2.0, 1.0, 8)
    constants = estimate_rate_constants(op, np.zeros(8), spec, 2.0)
    assert constants.validated
    assert constants.norm_coeff > 0.0
    # R(u) = ||u||^2 makes the inequality hold with coefficient 1; the
    # certified value must not exceed it
    assert constants.norm_coeff <= 1.0 + 1e-12


def test_constants_diagonal_sparse_instances():
    s = (np.arange(16) + 1.0) ** -1.0
    op = make_diagonal_linear(s)
    u = np.zeros(16)
    u[[0, 3, 8]] = [1.0, -0.7, 1.2]
    for q, exponent in ((1.0, 1.0), (1.5, 1.5), (1.5, 2.0), (2.0, 2.0)):
        spec = PenaltySpec.uniform(q, 1.0, 16)
        constants = estimate_rate_constants(op, u, spec, exponent)
        assert constants.validated
        assert constants.exponent == exponent
        assert constants.norm_coeff > 0.0
        assert constants.residual_coeff > 0.0


def test_constants_validation_catches_inflation():
    # near-tight instance: R(u) = ||u||^2 makes 1.0 the sharp coefficient,
    # so a tenfold inflation of the certified value must fail sampling
    op = make_dense_linear(np.eye(8))
    spec = PenaltySpec.uniform(2.0, 1.0, 8)
    u = np.zeros(8)
    constants = estimate_rate_constants(op, u, spec, 2.0)
    inflated = RateConstants(
        norm_coeff=10.0 * constants.norm_coeff,
        residual_coeff=constants.residual_coeff,
        exponent=constants.exponent,
        penalty_radius=constants.penalty_radius,
        residual_radius=constants.residual_radius,
    )
    report = validate_rate_inequality(op, u, spec, inflated, n_samples=1000, radius=0.1)
    assert report.n_violations > 0
    assert report.worst_slack < 0.0
    # the honest certified constants validate at the same radius
    assert constants.validated


def test_constants_exponent_dispatch_errors():
    op = make_dense_linear(np.eye(4))
    u = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        estimate_rate_constants(op, u, PenaltySpec.uniform(1.5, 1.0, 4), 1.0)
    with pytest.raises(ValueError):
        estimate_rate_constants(op, u, PenaltySpec.uniform(1.0, 1.0, 4), 1.5)
    with pytest.raises(ValueError):
        estimate_rate_constants(op, u, PenaltySpec.uniform(1.0, 1.0, 4), 2.0)
    with pytest.raises(ValueError):
        estimate_rate_constants(op, u, PenaltySpec.uniform(1.5, 1.0, 4), 1.5, n_samples=50)


def test_constants_rank_deficient_support_rejected():
    mat = np.zeros((4, 3))
    mat[:, 0] = [1.0, 0.0, 0.0, 0.0]
    mat[:, 1] = mat[:, 0]
    mat[:, 2] = [0.0, 1.0, 0.0, 0.0]
    op = make_dense_linear(mat)
    spec = PenaltySpec.uniform(1.5, 1.0, 3)
    with pytest.raises(ValueError):
        estimate_rate_constants(op, np.array([1.0, 1.0, 0.0]), spec, 1.5)


def test_theoretical_bound_goldens():
    constants = RateConstants(
        norm_coeff=1.0, residual_coeff=1.0, exponent=1.0,
        penalty_radius=np.inf, residual_radius=np.inf,
    )
    err, resid = theoretical_bound(constants, 1, alpha=0.5, delta=0.0)
    assert err == 0.0 and resid == 0.0
    err, resid = theoretical_bound(constants, 1, alpha=0.5, delta=0.1)
    assert err == pytest.approx(0.3)

    for r in (1.0, 1.5, 2.0):
        c = RateConstants(
            norm_coeff=1.0, residual_coeff=1.0, exponent=r,
            penalty_radius=np.inf, residual_radius=np.inf,
        )
        delta = 0.01
        err, _ = theoretical_bound(c, 2, alpha=delta, delta=delta)
        assert err == pytest.approx((2.5 * delta) ** (1.0 / r), rel=1e-12)


def test_theoretical_bound_monotone_and_rejections():
    constants = RateConstants(
        norm_coeff=0.5, residual_coeff=2.0, exponent=1.5,
        penalty_radius=np.inf, residual_radius=np.inf,
    )
    deltas = np.linspace(0.0, 0.5, 20)
    errs = [theoretical_bound(constants, 2, 0.1, d)[0] for d in deltas]
    assert np.all(np.diff(errs) >= 0.0)

    c1 = RateConstants(
        norm_coeff=0.5, residual_coeff=2.0, exponent=1.0,
        penalty_radius=np.inf, residual_radius=np.inf,
    )
    alphas = [0.4, 0.3, 0.2, 0.1]
    errs = [theoretical_bound(c1, 1, a, 0.05)[0] for a in alphas]
    assert np.all(np.diff(errs) >= 0.0)
    with pytest.raises(ValueError):
        theoretical_bound(c1, 1, alpha=0.5, delta=0.1)  # alpha*beta2 = 1
    with pytest.raises(ValueError):
        theoretical_bound(c1, 3, alpha=0.1, delta=0.1)


def test_sparse_conditions_identity_q1():
    op = make_dense_linear(np.eye(6))
    spec = PenaltySpec.uniform(1.0, 1.0, 6)
    u = np.zeros(6)
    u[[0, 2]] = [1.0, -2.0]
    report = check_sparse_rate_conditions(op, u, spec)
    assert report["passed"]
    assert report["off_support_margin"]["gap_split"] == 0.5
    assert report["off_support_margin"]["max_off_support"] == pytest.approx(0.0)


def test_sparse_conditions_rank_deficient_support():
    mat = np.zeros((4, 3))
    mat[:, 0] = [1.0, 2.0, 0.0, 1.0]
    mat[:, 1] = mat[:, 0]
    mat[:, 2] = [0.0, 1.0, 1.0, 0.0]
    op = make_dense_linear(mat)
    spec = PenaltySpec.uniform(1.0, 1.0, 3)
    report = check_sparse_rate_conditions(op, np.array([1.0, 1.0, 0.0]), spec)
    assert not report["support_injectivity"]["passed"]
    assert not report["passed"]


def test_sparse_conditions_nonlinear_sampled():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((24, 16)) / np.sqrt(24)
    b = rng.standard_normal((24, 16)) / np.sqrt(24)
    op = make_toy_nonlinear(a, b, 1e-3)
    spec = PenaltySpec.uniform(1.5, 1.0, 16)
    u = np.zeros(16)
    u[[2, 7, 11]] = [1.0, -0.8, 0.6]
    report = check_sparse_rate_conditions(op, u, spec)
    entry = report["linearization_inequality"]
    assert entry["passed"]
    assert np.isfinite(entry["data_shift_coeff"])
    assert entry["linearization_coeff"] == 1.0
