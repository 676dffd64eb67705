"""Penalty evaluation, subgradients, Bregman bounds, and the prox map."""

import numpy as np
import pytest

from sparsereg.penalty import (
    PenaltySpec,
    bregman_distance,
    penalty_subgradient,
    penalty_value,
    prox,
    scalar_bregman_constant,
    subgradient_interval,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        PenaltySpec.uniform(0.5, 1.0, 4)
    with pytest.raises(ValueError):
        PenaltySpec.uniform(2.5, 1.0, 4)
    with pytest.raises(ValueError):
        PenaltySpec(1.5, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        PenaltySpec(1.5, np.array([]))
    spec = PenaltySpec(1.5, np.array([2.0, 0.5]))
    assert spec.w_min == 0.5
    assert spec.n == 2


def test_value_golden():
    spec = PenaltySpec.uniform(1.0, 1.0, 3)
    assert penalty_value(np.array([1.0, -2.0, 0.0]), spec) == 3.0
    assert penalty_value(np.zeros(2), PenaltySpec.uniform(1.7, 2.0, 2)) == 0.0
    spec = PenaltySpec.uniform(1.5, 2.0, 2)
    value = penalty_value(np.array([0.5, 0.5]), spec)
    assert value == pytest.approx(4.0 * 0.5**1.5, abs=1e-15)


def test_subgradient_golden():
    spec = PenaltySpec.uniform(2.0, 1.0, 2)
    np.testing.assert_allclose(
        penalty_subgradient(np.array([3.0, -1.0]), spec), [6.0, -2.0]
    )
    spec1 = PenaltySpec.uniform(1.0, 1.0, 2)
    np.testing.assert_allclose(penalty_subgradient(np.array([5.0, 0.0]), spec1), [1.0, 0.0])
    lo, hi = subgradient_interval(np.array([5.0, 0.0]), spec1)
    np.testing.assert_allclose(lo, [1.0, -1.0])
    np.testing.assert_allclose(hi, [1.0, 1.0])
    spec15 = PenaltySpec.uniform(1.5, 1.0, 1)
    np.testing.assert_allclose(penalty_subgradient(np.array([4.0]), spec15), [3.0])


def test_subgradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    for q in (1.25, 1.5, 1.75, 2.0):
        weights = rng.uniform(0.5, 2.0, 6)
        spec = PenaltySpec(q, weights)
        # differentiable region only: all coefficients bounded away from 0
        u = rng.uniform(0.1, 2.0, 6) * np.where(rng.random(6) < 0.5, -1.0, 1.0)
        grad = penalty_subgradient(u, spec)
        h = 1e-7
        for i in range(6):
            step = np.zeros(6)
            step[i] = h
            fd = (penalty_value(u + step, spec) - penalty_value(u - step, spec)) / (2 * h)
            assert abs(fd - grad[i]) <= 1e-6 * max(1.0, abs(grad[i]))


def test_bregman_golden():
    spec = PenaltySpec.uniform(2.0, 1.0, 1)
    report = bregman_distance(np.array([3.0]), np.array([1.0]), spec, np.array([2.0]))
    assert report.value == pytest.approx(4.0, abs=1e-12)
    u = np.array([0.7, -0.2])
    spec2 = PenaltySpec.uniform(1.5, 1.0, 2)
    same = bregman_distance(u, u, spec2, penalty_subgradient(u, spec2))
    assert same.value == pytest.approx(0.0, abs=1e-14)
    spec15 = PenaltySpec.uniform(1.5, 1.0, 1)
    report = bregman_distance(
        np.array([2.0]), np.array([1.0]), spec15, np.array([1.5])
    )
    assert report.value == pytest.approx(2.0**1.5 - 2.5, abs=1e-12)
    assert report.value == pytest.approx(0.3284271247461903, abs=1e-12)


def test_bregman_rejects_bad_subgradient():
    spec = PenaltySpec.uniform(1.5, 1.0, 1)
    with pytest.raises(ValueError):
        bregman_distance(np.array([2.0]), np.array([1.0]), spec, np.array([-4.0]))


def test_bregman_lower_bound_sampled():
    rng = np.random.default_rng(11)
    for q in (1.25, 1.5, 2.0):
        for _ in range(200):
            n = int(rng.integers(1, 9))
            spec = PenaltySpec(q, rng.uniform(0.2, 2.0, n))
            u = rng.uniform(-3.0, 3.0, n)
            u_tilde = rng.uniform(-3.0, 3.0, n)
            report = bregman_distance(u_tilde, u, spec, penalty_subgradient(u, spec))
            assert report.value >= report.lower_bound - 1e-10 * max(
                1.0, report.lower_bound
            )


def test_constant_golden_values():
    # frozen from the grid+refinement oracle; the q = 2 ratio is exactly 2
    # and the interior infimum is the large-scale limit q(q-1)/2
    assert scalar_bregman_constant(2.0) == pytest.approx(1.9997999999999538, rel=1e-12)
    assert scalar_bregman_constant(1.5) == pytest.approx(0.3749625, rel=1e-12)
    assert scalar_bregman_constant(1.25) == pytest.approx(0.156234375, rel=1e-12)
    assert scalar_bregman_constant(1.0001) == pytest.approx(
        4.999999949999449e-05, rel=1e-9
    )
    assert abs(scalar_bregman_constant(2.0) - 2.0) <= 1e-3


def test_constant_rejects_out_of_range():
    for bad in (1.0, 0.5, 2.1):
        with pytest.raises(ValueError):
            scalar_bregman_constant(bad)


def test_constant_two_point_inequality():
    # d_q * (a-b)^2 <= (|a|^{2-q} + |a-b|^{2-q}) * (|b|^q - |a|^q - q|a|^{q-1}sgn(a)(b-a))
    # sampled on moderate scales where direct float evaluation is well
    # conditioned; extreme scales cancel catastrophically and need the
    # compactified oracle form instead
    rng = np.random.default_rng(5)
    for q in (1.25, 1.5, 1.75, 2.0):
        d = scalar_bregman_constant(q)
        a = rng.uniform(-8.0, 8.0, 2000)
        b = rng.uniform(-8.0, 8.0, 2000)
        keep = np.abs(a - b) > 1e-3
        a, b = a[keep], b[keep]
        bracket = (
            np.abs(b) ** q
            - np.abs(a) ** q
            - q * np.abs(a) ** (q - 1.0) * np.sign(a) * (b - a)
        )
        prefactor = np.abs(a) ** (2.0 - q) + np.abs(a - b) ** (2.0 - q)
        lhs = prefactor * bracket
        rhs = d * (a - b) ** 2
        assert np.all(lhs >= rhs - 1e-9 * np.maximum(1.0, np.abs(rhs)))


def _scalar_prox_oracle(z: float, tau: float, w: float, q: float) -> float:
    # golden-section search on [0, |z|]; the objective is even in x with
    # the minimizer sharing the sign of z.  Extended precision keeps the
    # flat-bottom comparison noise (~sqrt(eps)*scale) below the 1e-8
    # comparison tolerance.
    one = np.longdouble(1.0)
    a = np.abs(np.longdouble(z))
    tw = np.longdouble(tau) * np.longdouble(w)
    qq = np.longdouble(q)
    lo, hi = np.longdouble(0.0), a
    golden = (np.sqrt(np.longdouble(5.0)) - one) / 2

    def objective(x):
        return (x - a) ** 2 / 2 + tw * x**qq

    c = hi - golden * (hi - lo)
    d = lo + golden * (hi - lo)
    for _ in range(150):
        if objective(c) < objective(d):
            hi, d = d, c
            c = hi - golden * (hi - lo)
        else:
            lo, c = c, d
            d = lo + golden * (hi - lo)
    x = (lo + hi) / 2
    return float(np.sign(z) * x)


def test_prox_golden():
    spec1 = PenaltySpec.uniform(1.0, 1.0, 1)
    np.testing.assert_allclose(prox(np.array([2.0]), 0.5, spec1), [1.5])
    spec2 = PenaltySpec.uniform(2.0, 1.0, 1)
    np.testing.assert_allclose(prox(np.array([2.0]), 0.5, spec2), [1.0])
    for q in (1.0, 1.3, 1.5, 2.0):
        spec = PenaltySpec.uniform(q, 1.0, 3)
        np.testing.assert_array_equal(prox(np.zeros(3), 0.7, spec), np.zeros(3))


def test_prox_kink_tie_break():
    # |z| exactly at the q = 1 threshold resolves to 0
    spec = PenaltySpec.uniform(1.0, 2.0, 1)
    assert prox(np.array([1.0]), 0.5, spec)[0] == 0.0
    assert prox(np.array([-1.0]), 0.5, spec)[0] == 0.0


def test_prox_matches_scalar_oracle():
    rng = np.random.default_rng(7)
    for q in (1.0, 1.25, 1.5, 1.75, 2.0):
        for _ in range(40):
            z = float(rng.uniform(-5.0, 5.0))
            tau = float(rng.uniform(0.05, 2.0))
            w = float(rng.uniform(0.1, 3.0))
            spec = PenaltySpec.uniform(q, w, 1)
            got = prox(np.array([z]), tau, spec)[0]
            want = _scalar_prox_oracle(z, tau, w, q)
            assert abs(got - want) <= 1e-8


def test_prox_optimality_on_grid():
    rng = np.random.default_rng(9)
    for q in (1.0, 1.5, 2.0):
        z = rng.uniform(-4.0, 4.0, 5)
        tau = 0.8
        spec = PenaltySpec(q, rng.uniform(0.3, 2.0, 5))
        x = prox(z, tau, spec)
        for i in range(5):
            grid = np.linspace(-2.0 * abs(z[i]) - 1.0, 2.0 * abs(z[i]) + 1.0, 10001)
            best = 0.5 * (x[i] - z[i]) ** 2 + tau * spec.weights[i] * abs(x[i]) ** q
            candidates = 0.5 * (grid - z[i]) ** 2 + tau * spec.weights[i] * np.abs(grid) ** q
            assert best <= candidates.min() + 1e-10


def test_prox_nonexpansive():
    rng = np.random.default_rng(13)
    for q in (1.0, 1.4, 1.8, 2.0):
        spec = PenaltySpec.uniform(q, 1.3, 50)
        z1 = rng.uniform(-5.0, 5.0, 50)
        z2 = rng.uniform(-5.0, 5.0, 50)
        x1 = prox(z1, 0.6, spec)
        x2 = prox(z2, 0.6, spec)
        assert np.all(np.abs(x1 - x2) <= np.abs(z1 - z2) + 1e-12)


def test_norm_monotonicity_inequality():
    # (sum |c|^t)^(1/t) <= (sum |c|^s)^(1/s) for 0 < s <= t
    rng = np.random.default_rng(17)
    for _ in range(500):
        n = int(rng.integers(1, 12))
        c = rng.uniform(-4.0, 4.0, n)
        s = float(rng.uniform(0.25, 3.0))
        t = float(rng.uniform(s, 4.0))
        lhs = float(np.sum(np.abs(c) ** t)) ** (1.0 / t)
        rhs = float(np.sum(np.abs(c) ** s)) ** (1.0 / s)
        assert lhs <= rhs * (1.0 + 1e-12)


def test_penalty_coercivity():
    # R_q(u) >= w_min * ||u||^q in an orthonormal basis
    rng = np.random.default_rng(19)
    for _ in range(500):
        n = int(rng.integers(1, 12))
        q = float(rng.uniform(1.0, 2.0))
        spec = PenaltySpec(q, rng.uniform(0.2, 3.0, n))
        u = rng.uniform(-4.0, 4.0, n)
        lhs = penalty_value(u, spec)
        rhs = spec.w_min * float(np.linalg.norm(u)) ** q
        assert lhs >= rhs * (1.0 - 1e-12)


def test_length_mismatch_rejected():
    spec = PenaltySpec.uniform(1.5, 1.0, 3)
    with pytest.raises(ValueError):
        penalty_value(np.zeros(4), spec)
    with pytest.raises(ValueError):
        prox(np.zeros(2), 1.0, spec)
