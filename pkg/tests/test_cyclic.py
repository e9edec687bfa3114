import math

import numpy as np
import pytest

from src.cyclic import (
    link_gains,
    link_residuals,
    ngene_char_eval,
    ngene_equilibrium,
    ngene_hopf,
    ngene_transversality,
    ngene_transversality_identity_check,
    ngene_transversality_lower_bound,
    no_delay_stability,
    omega_bracket,
    routh_hurwitz_n3,
    symmetric_window,
)
from src.errors import DomainError
from src.hopf import critical_delays, transversality
from src.logistic import solve_equilibrium
from src.models import CyclicLoopParams, TwoGeneParams


def _worked_example() -> CyclicLoopParams:
    return CyclicLoopParams.symmetric(3, kappa=2.0, gamma=0.5, theta=2.0, lam=1.5)


def test_worked_example_equilibrium_and_gain():
    loop = _worked_example()
    x = ngene_equilibrium(loop)
    assert np.allclose(x, 2.0, atol=1e-12)
    assert np.max(link_residuals(loop, x)) < 1e-12
    gains, Lambda = link_gains(loop, x)
    assert np.allclose(gains, 0.75)
    assert Lambda == pytest.approx(0.422, abs=1e-3)


def test_worked_example_hopf():
    loop = _worked_example()
    hopf = ngene_hopf(loop)
    assert hopf is not None
    assert hopf.k_star == 1
    assert hopf.omega_c == pytest.approx(0.5590, abs=1e-4)
    assert hopf.tau_c == pytest.approx(1.1062, abs=1e-4)
    assert hopf.T_c == pytest.approx(11.24, abs=0.01)
    assert hopf.S1 == pytest.approx(5.333, abs=1e-3)
    assert hopf.S2 == pytest.approx(2.667, abs=1e-3)
    assert hopf.trans_re == pytest.approx(0.0721, abs=1e-4)
    assert abs(ngene_char_eval(1j * hopf.omega_c, loop, hopf.tau_c, hopf.Lambda)) < 1e-12
    assert hopf.window == pytest.approx((0.125, 1.0))


def test_transversality_identity_and_bound():
    loop = _worked_example()
    hopf = ngene_hopf(loop)
    for k in range(3):
        assert ngene_transversality_identity_check(loop, hopf, k) < 1e-10
    lower = ngene_transversality_lower_bound(loop, hopf)
    assert 0.0 < lower <= hopf.trans_re
    re1, _ = ngene_transversality(hopf, 1)
    assert 0.0 < re1 < hopf.trans_re


def test_symmetric_windows():
    assert symmetric_window(0.5, 3) == pytest.approx((0.125, 1.0), rel=1e-12)
    lo, hi = symmetric_window(0.7, 4)
    assert lo == pytest.approx(0.7**4)
    assert hi == pytest.approx(4 * 0.7**4, rel=1e-12)
    assert symmetric_window(0.5, 2)[1] == math.inf
    with pytest.raises(DomainError):
        symmetric_window(0.5, 1)


def test_two_gene_reduction():
    params = TwoGeneParams.canonical()
    eq = solve_equilibrium(params)
    loop = CyclicLoopParams.from_two_gene(params)
    x = ngene_equilibrium(loop)
    assert x[0] == pytest.approx(eq.x1_star, rel=1e-10)
    assert x[1] == pytest.approx(eq.x2_star, rel=1e-10)
    hopf = ngene_hopf(loop)
    ref = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)[0]
    assert hopf.Lambda == pytest.approx(eq.AB, rel=1e-10)
    assert hopf.omega_c == pytest.approx(ref.omega_c, rel=1e-9)
    assert hopf.tau_c == pytest.approx(ref.tau_c, rel=1e-9)
    assert hopf.trans_re == pytest.approx(transversality(eq.A, eq.B, params.gamma1, params.gamma2).re, rel=1e-9)


def test_asymmetric_rates_bracket_and_root():
    loop = CyclicLoopParams(
        kappa=(2.0, 3.0, 2.5),
        gamma=(0.3, 0.5, 0.9),
        theta=(2.5 / 0.9 / 2, 2.0 / 0.3 / 2, 3.0 / 0.5 / 2),
        tau=(0.0, 0.0, 0.0),
        epsilon=(1, -1, 1),
        lam=3.0,
    )
    hopf = ngene_hopf(loop)
    assert hopf is not None and hopf.window is None
    lo, hi = omega_bracket(loop.gamma, hopf.Lambda)
    assert lo <= hopf.omega_c**2 <= hi
    assert abs(ngene_char_eval(1j * hopf.omega_c, loop, hopf.tau_c, hopf.Lambda)) < 1e-10
    assert hopf.tau_c > 0.0


def test_no_hopf_for_weak_loop():
    loop = CyclicLoopParams.symmetric(3, kappa=2.0, gamma=0.5, theta=2.0, lam=0.1)
    assert ngene_hopf(loop) is None


def test_no_delay_stability_matches_routh_hurwitz():
    gamma = (0.3, 0.5, 0.9)
    loop = CyclicLoopParams(
        kappa=(1.0, 1.0, 1.0), gamma=gamma, theta=(1.0, 1.0, 1.0), tau=(0.0, 0.0, 0.0), epsilon=(-1, 1, 1), lam=1.0
    )
    for Lambda in (0.5, 1.0, 2.0, 5.0):
        assert no_delay_stability(loop, Lambda).stable == routh_hurwitz_n3(gamma, Lambda)

    worked = _worked_example()
    nd = no_delay_stability(worked)
    assert nd.stable and routh_hurwitz_n3(worked.gamma, 0.421875)
    assert nd.abscissa == pytest.approx(-0.5 + 0.75 * math.cos(math.pi / 3))


def test_loop_validation():
    with pytest.raises(DomainError):
        CyclicLoopParams(
            kappa=(1.0, 1.0, 1.0), gamma=(1.0, 1.0, 1.0), theta=(1.0, 1.0, 1.0), tau=(0.0, 0.0, 0.0), epsilon=(1, 1, 1), lam=1.0
        )
    with pytest.raises(DomainError):
        CyclicLoopParams(kappa=(1.0,), gamma=(1.0,), theta=(1.0,), tau=(0.0,), epsilon=(-1,), lam=1.0)
    with pytest.raises(DomainError):
        CyclicLoopParams(kappa=(1.0, 1.0), gamma=(1.0,), theta=(1.0, 1.0), tau=(0.0, 0.0), epsilon=(-1, 1), lam=1.0)
