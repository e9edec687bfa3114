import math

import numpy as np
import pytest

from src.errors import DomainError
from src.hopf import critical_delays, transversality
from src.logistic import solve_equilibrium
from src.models import CyclicLoopParams, TwoGeneParams
from src.spectrum import (
    Characteristic,
    continue_root,
    fd_transversality,
    local_fd_slope,
    newton_root,
    tangent_angle_deg,
)

G1, G2 = 0.25, 0.5


def _canonical_char():
    eq = solve_equilibrium(TwoGeneParams.canonical())
    return eq, Characteristic.from_gains(eq.A, eq.B, G1, G2)


def test_derivative_matches_finite_difference():
    _, char = _canonical_char()
    mu, tau, h = complex(-0.2, 1.9), 0.3, 1e-6
    fd = (char.value(mu + h, tau) - char.value(mu - h, tau)) / (2 * h)
    assert abs(char.derivative(mu, tau) - fd) < 1e-7


def test_newton_lands_on_hopf_root():
    eq, char = _canonical_char()
    hopf = critical_delays(eq.A, eq.B, G1, G2, k_max=0)[0]
    mu = newton_root(char, complex(0.05, hopf.omega_c + 0.05), hopf.tau_c)
    assert abs(char.value(mu, hopf.tau_c)) < 1e-12
    assert abs(mu.real) < 1e-10
    assert mu.imag == pytest.approx(hopf.omega_c, rel=1e-10)


def test_continuation_crossing():
    eq, char = _canonical_char()
    hopf = critical_delays(eq.A, eq.B, G1, G2, k_max=0)[0]
    grid = np.round(np.arange(0.005, 0.3001, 0.005), 12)
    path = continue_root(char, grid)
    assert not path.truncated
    assert len(path.taus) == len(grid)
    assert path.tau_cross == pytest.approx(0.1340, abs=5e-4)
    assert path.tau_cross == pytest.approx(hopf.tau_c, abs=1e-8)
    assert path.omega_cross == pytest.approx(hopf.omega_c, abs=1e-3)
    # real part increases along the path through the crossing
    assert path.root_at(0.1).real < 0.0 < path.root_at(0.2).real


def test_fd_transversality_matches_closed_form():
    eq, char = _canonical_char()
    grid = np.round(np.arange(0.005, 0.3001, 0.005), 12)
    path = continue_root(char, grid)
    slope = fd_transversality(char, path, path.tau_cross)
    closed = transversality(eq.A, eq.B, G1, G2)
    assert slope.real == pytest.approx(closed.re, rel=1e-3)
    assert slope.imag == pytest.approx(closed.im, rel=1e-3)
    assert tangent_angle_deg(slope) == pytest.approx(18.0, abs=1.0)
    with pytest.raises(DomainError):
        fd_transversality(char, path, 0.3)


def test_local_slope_on_second_branch():
    eq, char = _canonical_char()
    branch = critical_delays(eq.A, eq.B, G1, G2, k_max=1)[1]
    slope = local_fd_slope(char, 1j * branch.omega_c, branch.tau_k)
    assert slope.real == pytest.approx(transversality(eq.A, eq.B, G1, G2, 1).re, rel=1e-3)


def test_cyclic_characteristic():
    loop = CyclicLoopParams.symmetric(3, kappa=2.0, gamma=0.5, theta=2.0, lam=1.5)
    char = Characteristic.from_loop(loop)
    assert char.Lambda == pytest.approx(0.421875, rel=1e-12)
    mu = newton_root(char, complex(0.01, 0.55), 1.1062)
    assert mu.imag == pytest.approx(0.5590, abs=1e-3)
    seed = char.delay_free_seed()
    assert seed.imag >= 0.0
    assert seed.real == pytest.approx(-0.5 + 0.75 * math.cos(math.pi / 3))


def test_grid_must_ascend():
    _, char = _canonical_char()
    with pytest.raises(DomainError):
        continue_root(char, [0.2, 0.1])
    with pytest.raises(DomainError):
        continue_root(char, [])


def test_tangent_angle():
    assert tangent_angle_deg(complex(1.0, -1.0)) == pytest.approx(45.0)
    assert tangent_angle_deg(complex(2.58, -0.83)) == pytest.approx(17.8, abs=0.1)
