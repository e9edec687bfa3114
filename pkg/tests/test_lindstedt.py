import dataclasses
import math

import pandas as pd
import pytest

from src.errors import DomainError, PreconditionError
from src.hopf import critical_delays
from src.lindstedt import (
    CriticalityRegion,
    amplitude_law,
    draw_params,
    general_lyapunov,
    montecarlo_criticality,
    simulated_criticality,
    solvability_residual,
    split_params,
    symmetric_lyapunov,
)
from src.logistic import solve_equilibrium, taylor_coefficients
from src.models import TwoGeneParams


def _setup(params: TwoGeneParams):
    eq = solve_equilibrium(params)
    hopf = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)[0]
    return eq, hopf, taylor_coefficients(params, eq)


def test_general_canonical_values():
    params = TwoGeneParams.canonical()
    eq, hopf, taylor = _setup(params)
    result = general_lyapunov(split_params(params, hopf), eq, hopf, taylor)
    assert result.T_coeff == pytest.approx(0.69589401, rel=1e-6)
    assert result.Omega2 == pytest.approx(-6.83900535, rel=1e-6)
    assert result.supercritical
    assert solvability_residual(result) < 1e-10


def test_general_is_split_invariant():
    params = TwoGeneParams.canonical()
    eq, hopf, taylor = _setup(params)
    results = [general_lyapunov(split_params(params, hopf, f), eq, hopf, taylor) for f in (0.2, 0.35, 0.5, 0.65, 0.8)]
    ref = results[2]
    for r in results:
        assert r.T_coeff == pytest.approx(ref.T_coeff, rel=1e-8)
        assert r.Omega2 == pytest.approx(ref.Omega2, rel=1e-8)
        assert solvability_residual(r) < 1e-10


def test_split_endpoints_are_allowed():
    params = TwoGeneParams.canonical()
    eq, hopf, taylor = _setup(params)
    ref = general_lyapunov(split_params(params, hopf), eq, hopf, taylor)
    for f in (0.0, 1.0):
        r = general_lyapunov(split_params(params, hopf, f), eq, hopf, taylor)
        assert r.T_coeff == pytest.approx(ref.T_coeff, rel=1e-8)


def test_general_rejects_wrong_split():
    params = TwoGeneParams.canonical()
    eq, hopf, taylor = _setup(params)
    with pytest.raises(PreconditionError):
        general_lyapunov(params.with_delays(0.1, 0.1), eq, hopf, taylor)
    with pytest.raises(DomainError):
        split_params(params, hopf, 1.5)


def test_symmetric_closed_form():
    params = TwoGeneParams.symmetric()
    eq, hopf, taylor = _setup(params)
    assert hopf.omega_c == pytest.approx(2.568, abs=1e-3)
    assert hopf.tau_c == pytest.approx(0.1127, abs=1e-3)
    sym = symmetric_lyapunov(split_params(params, hopf), eq, hopf)
    assert sym.amplitude_prefactor == pytest.approx(2.59, abs=0.02)
    assert sym.Omega2 < 0.0


def test_general_reduces_to_symmetric_when_quadratic_terms_vanish():
    params = TwoGeneParams.symmetric()
    eq, hopf, taylor = _setup(params)
    sym = symmetric_lyapunov(split_params(params, hopf), eq, hopf)
    gen = general_lyapunov(split_params(params, hopf), eq, hopf, taylor)
    assert gen.T_coeff == pytest.approx(sym.T_coeff, rel=1e-9)
    assert gen.Omega2 == pytest.approx(sym.Omega2, rel=1e-9)


def test_symmetric_rejects_asymmetric_thresholds():
    params = TwoGeneParams.canonical()
    eq, hopf, _ = _setup(params)
    with pytest.raises(PreconditionError) as exc:
        symmetric_lyapunov(split_params(params, hopf), eq, hopf)
    assert "general_lyapunov" in str(exc.value)


def test_amplitude_law_and_simulated_criticality():
    params = TwoGeneParams.canonical()
    eq, hopf, taylor = _setup(params)
    result = general_lyapunov(split_params(params, hopf), eq, hopf, taylor)
    A1, A2, omega = amplitude_law(result, hopf.tau_c + 0.01)
    assert A1 == pytest.approx(2 * math.sqrt(0.01 / result.T_coeff))
    assert A2 == pytest.approx(abs(result.q2) * A1)
    assert omega < hopf.omega_c
    with pytest.raises(DomainError):
        amplitude_law(result, hopf.tau_c - 0.01)

    T_sim = simulated_criticality(2.37)
    assert abs(T_sim - result.T_coeff) / result.T_coeff < 0.06
    with pytest.raises(DomainError):
        simulated_criticality(0.0)


def test_draws_are_reproducible_and_inside_region():
    region = CriticalityRegion()
    a = draw_params(11, 5, region)
    b = draw_params(11, 5, region)
    assert a == b
    assert draw_params(11, 6, region) != a
    assert region.gamma[0] <= a.gamma1 <= region.gamma[1]
    assert 0.0 < a.theta1 < a.M1 and 0.0 < a.theta2 < a.M2


def test_montecarlo_all_supercritical_and_thread_independent():
    serial = montecarlo_criticality(40, seed=7, threads=1)
    assert serial.accepted == 40
    assert serial.fraction_positive == 1.0
    assert serial.min_T > 0.0
    assert serial.nonpositive.empty
    parallel = montecarlo_criticality(40, seed=7, threads=2)
    pd.testing.assert_frame_equal(serial.samples.reset_index(drop=True), parallel.samples.reset_index(drop=True))


def test_montecarlo_empty_request():
    summary = montecarlo_criticality(0, seed=1)
    assert summary.accepted == 0 and summary.min_T is None


def _random_hopf_sets(count: int, seed: int, symmetric: bool = False):
    region = CriticalityRegion()
    found = []
    for index in range(20 * count):
        params = draw_params(seed, index, region)
        if symmetric:
            params = dataclasses.replace(params, theta1=params.M1 / 2, theta2=params.M2 / 2)
        eq = solve_equilibrium(params)
        if eq.AB <= params.gamma1 * params.gamma2:
            continue
        found.append((params, *_setup(params)))
        if len(found) == count:
            return found
    raise AssertionError(f"only {len(found)} Hopf draws out of {20 * count}")


def test_split_invariance_on_random_sets():
    for params, eq, hopf, taylor in _random_hopf_sets(20, seed=17):
        results = [
            general_lyapunov(split_params(params, hopf, f), eq, hopf, taylor) for f in (0.0, 0.25, 0.5, 0.75, 1.0)
        ]
        ref = results[2]
        for r in results:
            assert r.T_coeff == pytest.approx(ref.T_coeff, rel=1e-8)
            assert r.Omega2 == pytest.approx(ref.Omega2, rel=1e-8)


def test_symmetric_thresholds_always_supercritical():
    for params, eq, hopf, taylor in _random_hopf_sets(1000, seed=19, symmetric=True):
        sym = symmetric_lyapunov(split_params(params, hopf), eq, hopf)
        assert sym.T_coeff > 0.0


def test_general_reduces_to_symmetric_on_random_sets():
    for params, eq, hopf, taylor in _random_hopf_sets(100, seed=23, symmetric=True):
        sym = symmetric_lyapunov(split_params(params, hopf), eq, hopf)
        gen = general_lyapunov(split_params(params, hopf), eq, hopf, taylor)
        assert gen.T_coeff == pytest.approx(sym.T_coeff, rel=1e-8)
        assert gen.Omega2 == pytest.approx(sym.Omega2, rel=1e-8)


def test_montecarlo_large_sample_is_supercritical():
    summary = montecarlo_criticality(4000, seed=2024, threads=4)
    assert summary.accepted == 4000
    assert summary.failed == 0
    assert summary.fraction_positive == 1.0
    assert summary.min_T > 0.0
