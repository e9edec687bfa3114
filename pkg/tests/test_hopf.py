import math

import pytest

from src.errors import DomainError
from src.hopf import (
    char_eval,
    classify_stability,
    critical_delays,
    dmu_dtau,
    extract_c1,
    hopf_discrepancy,
    hopf_eigenvector,
    hopf_frequency,
    linear_period_slope,
    solve_gain_for_delay,
    transversality,
)
from src.lindstedt import CriticalityRegion, draw_params
from src.logistic import solve_equilibrium
from src.models import TwoGeneParams

G1, G2 = 0.25, 0.5


def _canonical_gains():
    eq = solve_equilibrium(TwoGeneParams.canonical())
    return eq.A, eq.B


def test_canonical_hopf_point_and_branches():
    A, B = _canonical_gains()
    branches = critical_delays(A, B, G1, G2, k_max=2)
    assert [b.branch_k for b in branches] == [0, 1, 2]
    first = branches[0]
    assert first.omega_c == pytest.approx(2.353, abs=1e-3)
    assert first.tau_c == pytest.approx(0.134, abs=1e-3)
    assert first.T_c == pytest.approx(2.67, abs=0.01)
    assert branches[1].tau_k == pytest.approx(2.804, abs=1e-3)
    assert branches[2].tau_k == pytest.approx(5.474, abs=1e-3)
    spacing = branches[2].tau_k - branches[1].tau_k
    assert math.isclose(spacing, 2 * math.pi / first.omega_c, rel_tol=1e-12)


def test_hopf_point_is_a_root():
    A, B = _canonical_gains()
    hopf = critical_delays(A, B, G1, G2, k_max=0)[0]
    for k in range(3):
        tau = hopf.tau_c + 2 * math.pi * k / hopf.omega_c
        assert abs(char_eval(1j * hopf.omega_c, tau, A, B, G1, G2)) < 1e-12 * (1 + A * B)


def test_modulus_identity():
    A, B = _canonical_gains()
    w = hopf_frequency(A, B, G1, G2)
    lhs = (w**2 + G1**2) * (w**2 + G2**2)
    assert math.isclose(lhs, (A * B) ** 2, rel_tol=1e-12)


def test_weak_feedback_has_no_hopf():
    params = TwoGeneParams.canonical().with_lambda(0.3)
    eq = solve_equilibrium(params)
    assert eq.AB <= G1 * G2
    assert hopf_frequency(eq.A, eq.B, G1, G2) is None
    assert critical_delays(eq.A, eq.B, G1, G2) == []
    assert classify_stability(params.with_total_delay(50.0)).kind == "absolutely-stable"


def test_gain_at_threshold_gives_no_hopf():
    AB = G1 * G2
    assert hopf_frequency(AB, 1.0, G1, G2) is None


def test_classify_stability_counts_crossings():
    params = TwoGeneParams.canonical()
    below = classify_stability(params.with_total_delay(0.10))
    assert below.kind == "stable-below-onset" and below.stable
    beyond = classify_stability(params.with_total_delay(0.20))
    assert beyond.kind == "unstable" and beyond.crossings == 1
    assert classify_stability(params.with_total_delay(3.0)).crossings == 2


def test_transversality_values():
    A, B = _canonical_gains()
    t0 = transversality(A, B, G1, G2)
    assert t0.re == pytest.approx(2.58, abs=0.01)
    assert t0.im == pytest.approx(-0.83, abs=0.01)
    assert t0.lower_bound == pytest.approx(2.36, abs=0.01)
    assert 0.0 < t0.lower_bound <= t0.re
    assert transversality(A, B, G1, G2, 1).re == pytest.approx(0.21, abs=0.01)
    assert transversality(A, B, G1, G2, 2).re == pytest.approx(0.06, abs=0.01)


def test_transversality_matches_implicit_derivative():
    A, B = _canonical_gains()
    hopf = critical_delays(A, B, G1, G2, k_max=1)
    for branch in hopf:
        t = transversality(A, B, G1, G2, branch.branch_k)
        slope = dmu_dtau(1j * branch.omega_c, branch.tau_k, G1, G2)
        assert slope.real == pytest.approx(t.re, rel=1e-10)
        assert slope.imag == pytest.approx(t.im, rel=1e-10)


def test_transversality_requires_hopf():
    with pytest.raises(DomainError):
        transversality(0.1, 0.1, G1, G2)


def test_linear_period_slope():
    A, B = _canonical_gains()
    hopf = critical_delays(A, B, G1, G2, k_max=0)[0]
    slope = linear_period_slope(hopf, transversality(A, B, G1, G2))
    assert slope == pytest.approx(0.94, abs=0.01)


def test_eigenvector_amplitude():
    A, B = _canonical_gains()
    hopf = critical_delays(A, B, G1, G2, k_max=0)[0]
    q = hopf_eigenvector(B, G1, hopf.omega_c, 0.5 * hopf.tau_c)
    assert q.q1_amp_sq == pytest.approx(0.6911, abs=1e-4)
    assert abs(q.q1) ** 2 == pytest.approx(q.q1_amp_sq, rel=1e-12)
    # the split only rotates the eigenvector
    other = hopf_eigenvector(B, G1, hopf.omega_c, 0.9 * hopf.tau_c)
    assert abs(other.q1) == pytest.approx(abs(q.q1), rel=1e-12)


def test_extract_c1_from_measurements():
    A, B = _canonical_gains()
    hopf = critical_delays(A, B, G1, G2, k_max=0)[0]
    trans = transversality(A, B, G1, G2)
    q = hopf_eigenvector(B, G1, hopf.omega_c, 0.5 * hopf.tau_c)
    c1 = extract_c1(hopf, trans, q, 2.37**2, 11.0)
    assert c1.re_c1 == pytest.approx(-1.27, abs=0.05)
    assert c1.ratio == pytest.approx(3.44, abs=0.1)
    assert c1.im_c1 == pytest.approx(c1.ratio * c1.re_c1)
    with pytest.raises(DomainError):
        extract_c1(hopf, trans, q, 0.0, 11.0)


def test_solve_gain_for_delay_roundtrip():
    gamma = math.log(2.0)
    AB, hopf = solve_gain_for_delay(gamma, gamma, 1.0)
    assert AB == pytest.approx(1.72, abs=0.02)
    assert hopf.tau_c == pytest.approx(1.0, abs=1e-10)
    assert hopf.T_c == pytest.approx(5.6, abs=0.1)
    check = critical_delays(AB, 1.0, gamma, gamma, k_max=0)[0]
    assert check.tau_c == pytest.approx(1.0, abs=1e-10)


def test_solve_gain_for_delay_out_of_bracket():
    with pytest.raises(DomainError):
        solve_gain_for_delay(0.5, 0.5, 1e-9)
    with pytest.raises(DomainError):
        solve_gain_for_delay(0.5, 0.5, 0.0)


def test_hopf_discrepancy_self_comparison_is_zero():
    A, B = _canonical_gains()
    diff = hopf_discrepancy((A, B), (A, B), G1, G2)
    assert diff == {"tau_c_pct": 0.0, "omega_c_pct": 0.0, "T_c_pct": 0.0}


def _random_gains(count: int, seed: int):
    """Gains and rates of random parameter sets that have a Hopf point."""
    region = CriticalityRegion()
    found = []
    for index in range(20 * count):
        params = draw_params(seed, index, region)
        eq = solve_equilibrium(params)
        if eq.AB > params.gamma1 * params.gamma2:
            found.append((eq.A, eq.B, params.gamma1, params.gamma2))
        if len(found) == count:
            return found
    raise AssertionError(f"only {len(found)} Hopf draws out of {20 * count}")


def test_crossing_speed_positive_and_decreasing_over_branches():
    for A, B, g1, g2 in _random_gains(50, seed=3):
        speeds = [transversality(A, B, g1, g2, branch_k=k).re for k in range(3)]
        assert speeds[0] > 0.0
        assert speeds[0] > speeds[1] > speeds[2] > 0.0


def test_transversality_lower_bound_holds_on_random_sets():
    for A, B, g1, g2 in _random_gains(1000, seed=5):
        trans = transversality(A, B, g1, g2)
        assert 0.0 < trans.lower_bound <= trans.re * (1 + 1e-12)
