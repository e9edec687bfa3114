import math

import numpy as np
import pytest

from src.errors import DomainError
from src.logistic import (
    critical_steepness,
    equilibrium_residuals,
    f_minus,
    f_plus,
    gain_curve,
    gain_of_lambda,
    hill_counterpart,
    hill_derivative,
    hill_plus,
    lambda_lower_bound,
    logistic_derivative,
    solve_equilibrium,
    steepness_asymptotics,
    taylor_coefficients,
)
from src.lindstedt import CriticalityRegion, draw_params
from src.models import TaylorCoefficients, TwoGeneParams


def _canonical() -> TwoGeneParams:
    return TwoGeneParams.canonical()


def _finite_difference_taylor(params: TwoGeneParams, eq, h: float) -> TaylorCoefficients:
    """Taylor coefficients from 5-point central stencils on kappa_i f at the equilibrium."""

    def rep(x):
        return params.kappa1 * f_minus(x, params.theta2, params.lam)

    def act(x):
        return params.kappa2 * f_plus(x, params.theta1, params.lam)

    def second(fn, x):
        return (-fn(x + 2 * h) + 16 * fn(x + h) - 30 * fn(x) + 16 * fn(x - h) - fn(x - 2 * h)) / (12 * h**2)

    def third(fn, x):
        return (fn(x + 2 * h) - 2 * fn(x + h) + 2 * fn(x - h) - fn(x - 2 * h)) / (2 * h**3)

    return TaylorCoefficients(
        b1=second(rep, eq.x2_star) / 2,
        b2=second(act, eq.x1_star) / 2,
        d1=third(rep, eq.x2_star) / 6,
        d2=third(act, eq.x1_star) / 6,
    )


def test_complement_identity():
    x = np.linspace(-5.0, 15.0, 101)
    for theta, lam in [(4.0, 3.0), (0.5, 0.1), (2.0, 40.0)]:
        total = f_plus(x, theta, lam) + f_minus(x, theta, lam)
        assert np.max(np.abs(total - 1.0)) < 1e-15


def test_complement_identity_on_random_points():
    rng = np.random.default_rng(7)
    n = 10_000
    x = rng.uniform(-20.0, 40.0, n)
    theta = rng.uniform(0.05, 20.0, n)
    lam = np.exp(rng.uniform(math.log(0.01), math.log(50.0), n))
    total = f_plus(x, theta, lam) + f_minus(x, theta, lam)
    assert np.max(np.abs(total - 1.0)) < 1e-15


def test_f_plus_midpoint_and_scalar_type():
    value = f_plus(4.0, 4.0, 3.0)
    assert isinstance(value, float)
    assert value == 0.5


def test_derivatives_match_finite_differences():
    theta, lam = 4.0, 3.0
    for x in (3.0, 3.873, 4.5):
        h = 1e-4
        fd1 = (f_plus(x + h, theta, lam) - f_plus(x - h, theta, lam)) / (2 * h)
        fd2 = (f_plus(x + h, theta, lam) - 2 * f_plus(x, theta, lam) + f_plus(x - h, theta, lam)) / h**2
        h3 = 1e-3
        fd3 = (
            f_plus(x + 2 * h3, theta, lam)
            - 2 * f_plus(x + h3, theta, lam)
            + 2 * f_plus(x - h3, theta, lam)
            - f_plus(x - 2 * h3, theta, lam)
        ) / (2 * h3**3)
        assert math.isclose(logistic_derivative(x, theta, lam, 1), fd1, rel_tol=1e-7)
        assert logistic_derivative(x, theta, lam, 2) == pytest.approx(fd2, rel=1e-4, abs=1e-6)
        assert logistic_derivative(x, theta, lam, 3) == pytest.approx(fd3, rel=1e-4, abs=1e-5)


def test_derivative_order_is_checked():
    with pytest.raises(DomainError):
        logistic_derivative(1.0, 1.0, 1.0, 4)


def test_params_reject_non_positive_rates():
    with pytest.raises(DomainError):
        TwoGeneParams(kappa1=3.0, gamma1=-0.25, kappa2=4.0, gamma2=0.5, theta1=4.0, theta2=3.0, lam=3.0)
    with pytest.raises(DomainError):
        _canonical().with_delays(-0.1, 0.2)


def test_canonical_equilibrium():
    params = _canonical()
    eq = solve_equilibrium(params)
    assert eq.x1_star == pytest.approx(3.873, abs=1e-3)
    assert eq.x2_star == pytest.approx(3.247, abs=1e-3)
    assert eq.A == pytest.approx(2.894, abs=1e-3)
    assert eq.B == pytest.approx(1.967, abs=1e-3)
    assert eq.AB == pytest.approx(5.693, abs=1e-3)
    assert max(equilibrium_residuals(params, eq)) < 1e-10
    assert 0.0 < eq.x1_star < params.M1
    assert 0.0 < eq.x2_star < params.M2


def test_equilibrium_for_extreme_steepness():
    for lam in (0.05, 50.0):
        params = _canonical().with_lambda(lam)
        eq = solve_equilibrium(params)
        assert max(equilibrium_residuals(params, eq)) < 1e-9


def test_taylor_coefficients_match_finite_differences():
    params = _canonical()
    eq = solve_equilibrium(params)
    tc = taylor_coefficients(params, eq)
    fd = _finite_difference_taylor(params, eq, h=1e-3)
    assert tc.b1 == pytest.approx(fd.b1, rel=1e-7)
    assert tc.b2 == pytest.approx(fd.b2, rel=1e-7)
    assert tc.d1 == pytest.approx(fd.d1, rel=1e-4)
    assert tc.d2 == pytest.approx(fd.d2, rel=1e-4)


def test_taylor_coefficients_on_random_parameter_sets():
    region = CriticalityRegion()
    for index in range(100):
        params = draw_params(11, index, region)
        eq = solve_equilibrium(params)
        tc = taylor_coefficients(params, eq)
        fd = _finite_difference_taylor(params, eq, h=2e-3 / params.lam)
        # coefficients scale as kappa lam^n, so compare on that scale
        quad = 1e-6 * max(params.kappa1, params.kappa2) * params.lam**2
        cubic = 1e-6 * max(params.kappa1, params.kappa2) * params.lam**3
        assert abs(tc.b1 - fd.b1) < quad, index
        assert abs(tc.b2 - fd.b2) < quad, index
        assert abs(tc.d1 - fd.d1) < cubic, index
        assert abs(tc.d2 - fd.d2) < cubic, index


def test_symmetric_thresholds_kill_quadratic_terms():
    params = TwoGeneParams.symmetric()
    eq = solve_equilibrium(params)
    assert eq.x1_star == pytest.approx(6.0, abs=1e-12)
    assert eq.x2_star == pytest.approx(4.0, abs=1e-12)
    tc = taylor_coefficients(params, eq)
    assert abs(tc.b1) < 1e-12 and abs(tc.b2) < 1e-12


def test_critical_steepness_and_asymptotics():
    params = _canonical()
    lam_c = critical_steepness(params)
    assert lam_c == pytest.approx(0.426, abs=2e-3)
    assert lam_c >= lambda_lower_bound(params)
    eq = solve_equilibrium(params.with_lambda(lam_c))
    assert eq.AB == pytest.approx(params.gamma1 * params.gamma2, rel=1e-9)

    asym = steepness_asymptotics(params)
    assert asym.c0 == 0.75
    assert math.isclose(asym.c_inf, 0.625, rel_tol=1e-12)


def test_critical_steepness_needs_interior_thresholds():
    params = TwoGeneParams(kappa1=3.0, gamma1=0.25, kappa2=4.0, gamma2=0.5, theta1=13.0, theta2=3.0, lam=3.0)
    with pytest.raises(DomainError):
        critical_steepness(params)


def test_gain_curve_small_steepness_limit():
    params = _canonical()
    df = gain_curve(params, [0.01, 0.1, 1.0, 3.0])
    assert list(df.columns) == ["lambda", "AB", "AB_over_lambda_sq", "monotone"]
    assert df["AB_over_lambda_sq"].iloc[0] == pytest.approx(0.75, rel=0.02)
    assert df["AB"].iloc[-1] == pytest.approx(5.693, abs=1e-3)
    assert df["monotone"].all()


def test_gain_increases_with_steepness():
    params = _canonical()
    lams = np.linspace(0.1, 10.0, 60)
    gains = np.array([gain_of_lambda(params, lam) for lam in lams])
    assert np.all(np.diff(gains) > 0.0)
    assert gain_curve(params, lams)["monotone"].all()


def test_hill_function_and_derivative():
    assert hill_plus(2.0, 2.0, 6.0) == pytest.approx(0.5)
    assert hill_plus(0.0, 2.0, 6.0) == 0.0
    x, h = 1.7, 1e-6
    fd = (hill_plus(x + h, 2.0, 6.0) - hill_plus(x - h, 2.0, 6.0)) / (2 * h)
    assert hill_derivative(x, 2.0, 6.0) == pytest.approx(fd, rel=1e-6)
    with pytest.raises(DomainError):
        hill_derivative(0.0, 2.0, 6.0)


def test_hill_counterpart_matches_threshold_slope():
    params = _canonical()
    counterpart = hill_counterpart(params)
    assert counterpart.hill.n1 == pytest.approx(12.0)
    assert counterpart.hill.n2 == pytest.approx(9.0)
    # slope of the Hill activation at its threshold equals lam / 4
    assert hill_derivative(params.theta1, params.theta1, counterpart.hill.n1) == pytest.approx(params.lam / 4)
    heq = counterpart.equilibrium
    assert 0.0 < heq.x1_star < params.M1
    assert heq.x2_star == pytest.approx(params.M2 * hill_plus(heq.x1_star, params.theta1, counterpart.hill.n1))
