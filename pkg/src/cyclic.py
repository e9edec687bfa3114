from __future__ import annotations

import cmath
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import BracketError, DomainError
from .logistic import f_minus, f_plus, logistic_derivative
from .models import CyclicHopf, CyclicLoopParams, NoDelayStability

logger = logging.getLogger(__name__)

_K_STAR_CAP = 64
_POLY_DEGREE_CAP = 16


def _link_value(loop: CyclicLoopParams, i: int, x_prev: float) -> float:
    fn = f_plus if loop.epsilon[i] > 0 else f_minus
    return fn(x_prev, loop.theta[i], loop.lam)


def _propagate(loop: CyclicLoopParams, x1: float) -> np.ndarray:
    """Forward substitution x_i = M_i f^{eps_i}(x_{i-1}) for i = 2..N starting from x1."""
    M = loop.M
    x = np.empty(loop.N)
    x[0] = x1
    for i in range(1, loop.N):
        x[i] = M[i] * _link_value(loop, i, x[i - 1])
    return x


def _fixed_point_map(loop: CyclicLoopParams, x1: float) -> Tuple[float, float]:
    """Composed map F(x1) = M_1 f^{eps_1}(x_N(x1)) and its derivative by the chain rule."""
    x = _propagate(loop, x1)
    M = loop.M
    slope = 1.0
    for i in range(1, loop.N):
        slope *= M[i] * loop.epsilon[i] * logistic_derivative(x[i - 1], loop.theta[i], loop.lam, 1)
    value = M[0] * _link_value(loop, 0, x[-1])
    slope *= M[0] * loop.epsilon[0] * logistic_derivative(x[-1], loop.theta[0], loop.lam, 1)
    return value, slope


def ngene_equilibrium(loop: CyclicLoopParams) -> np.ndarray:
    """
    Positive equilibrium of the cyclic loop.

    For a negative loop the composed map F is strictly decreasing on
    [0, M_1], so F(x1) - x1 changes sign exactly once.
    """
    M1 = float(loop.M[0])

    def h(x1: float) -> float:
        return _fixed_point_map(loop, x1)[0] - x1

    x1 = optimize.bisect(h, 0.0, M1, xtol=1e-6)
    for _ in range(30):
        value, slope = _fixed_point_map(loop, x1)
        step = (value - x1) / (slope - 1.0)
        candidate = x1 - step
        if not (0.0 < candidate < M1):
            break
        x1 = candidate
        if abs(step) <= 4.0 * np.finfo(float).eps * max(1.0, x1):
            break
    return _propagate(loop, x1)


def link_residuals(loop: CyclicLoopParams, x_star: np.ndarray) -> np.ndarray:
    M = loop.M
    out = np.empty(loop.N)
    for i in range(loop.N):
        target = M[i] * _link_value(loop, i, x_star[i - 1])
        out[i] = abs(target - x_star[i]) / x_star[i]
    return out


def link_gains(loop: CyclicLoopParams, x_star: np.ndarray) -> Tuple[np.ndarray, float]:
    """Per-link gains A_i = kappa_i lam f+(1-f+) on the incoming link, and Lambda = prod A_i."""
    gains = np.array(
        [loop.kappa[i] * logistic_derivative(x_star[i - 1], loop.theta[i], loop.lam, 1) for i in range(loop.N)]
    )
    return gains, float(np.prod(gains))


def loop_gain(loop: CyclicLoopParams) -> float:
    return link_gains(loop, ngene_equilibrium(loop))[1]


def ngene_char_eval(mu: complex, loop: CyclicLoopParams, tau: float, Lambda: Optional[float] = None) -> complex:
    if Lambda is None:
        Lambda = loop_gain(loop)
    value = complex(1.0)
    for g in loop.gamma:
        value *= mu + g
    return value + Lambda * cmath.exp(-mu * tau)


def omega_bracket(gamma, Lambda: float) -> Tuple[float, float]:
    """A-priori bracket for omega_c^2 from min/max degradation rates."""
    gamma = np.asarray(gamma, dtype=float)
    root = Lambda ** (2.0 / len(gamma))
    return max(0.0, root - float(np.max(gamma**2))), max(0.0, root - float(np.min(gamma**2)))


def _frequency_sq(gamma: np.ndarray, Lambda: float) -> float:
    lo, hi = omega_bracket(gamma, Lambda)
    if lo == hi:
        return lo
    target = 2.0 * math.log(Lambda)

    def excess(p: float) -> float:
        return float(np.sum(np.log(p + gamma**2))) - target

    if excess(lo) >= 0.0:
        return lo
    if excess(hi) <= 0.0:
        return hi
    return optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)


def symmetric_window(gamma: float, N: int) -> Tuple[float, float]:
    """Loop-gain window in which the delay itself induces the Hopf bifurcation (equal rates)."""
    if not (gamma > 0.0) or N < 2:
        raise DomainError(f"symmetric_window needs gamma > 0 and N >= 2, got gamma={gamma}, N={N}")
    lower = gamma**N
    if N == 2:
        return lower, math.inf
    return lower, lower / math.cos(math.pi / N) ** N


def _sums(omega: float, gamma: np.ndarray) -> Tuple[float, float]:
    w = 1.0 / (omega**2 + gamma**2)
    return float(np.sum(w)), float(np.sum(gamma * w))


def _transversality(S1: float, S2: float, omega: float, tau: float) -> Tuple[float, float]:
    denom = S1**2 + (S2 + tau) ** 2 / omega**2
    return S1 / denom, -(S2 + tau) / omega / denom


def ngene_hopf(loop: CyclicLoopParams) -> Optional[CyclicHopf]:
    """Hopf frequency, first critical total delay and transversality of the cyclic loop."""
    x_star = ngene_equilibrium(loop)
    _, Lambda = link_gains(loop, x_star)
    gamma = np.asarray(loop.gamma, dtype=float)
    if Lambda <= float(np.prod(gamma)):
        return None
    omega = math.sqrt(_frequency_sq(gamma, Lambda))
    if omega <= 0.0:
        return None
    phase = float(np.sum(np.arctan(omega / gamma)))
    for k in range(1, _K_STAR_CAP + 1):
        bracket = (2 * k - 1) * math.pi - phase
        if bracket > 0.0:
            break
    else:
        raise BracketError(f"ngene_hopf failed: no positive critical delay for k <= {_K_STAR_CAP}")
    tau_c = bracket / omega
    S1, S2 = _sums(omega, gamma)
    trans_re, trans_im = _transversality(S1, S2, omega, tau_c)
    window = symmetric_window(float(gamma[0]), loop.N) if np.all(gamma == gamma[0]) else None
    return CyclicHopf(
        omega_c=omega,
        tau_c=tau_c,
        k_star=k,
        S1=S1,
        S2=S2,
        trans_re=trans_re,
        trans_im=trans_im,
        Lambda=Lambda,
        window=window,
    )


def ngene_transversality(hopf: CyclicHopf, k: int) -> Tuple[float, float]:
    """Transversality pair at branch tau_c + 2 pi k / omega_c."""
    return _transversality(hopf.S1, hopf.S2, hopf.omega_c, hopf.tau_branch(k))


def ngene_transversality_lower_bound(loop: CyclicLoopParams, hopf: CyclicHopf) -> float:
    """Rate bound from S2 <= N / (2 omega_c)."""
    S2_bound = loop.N / (2.0 * hopf.omega_c)
    return hopf.S1 / (hopf.S1**2 + (S2_bound + hopf.tau_c) ** 2 / hopf.omega_c**2)


def no_delay_stability(loop: CyclicLoopParams, Lambda: Optional[float] = None) -> NoDelayStability:
    """Roots of prod(mu + gamma_i) + Lambda, the characteristic polynomial at zero delay."""
    if Lambda is None:
        Lambda = loop_gain(loop)
    gamma = np.asarray(loop.gamma, dtype=float)
    N = loop.N
    if np.all(gamma == gamma[0]):
        k = np.arange(N)
        roots = -gamma[0] + Lambda ** (1.0 / N) * np.exp(1j * np.pi * (2 * k + 1) / N)
    elif N <= _POLY_DEGREE_CAP:
        coeffs = np.poly(-gamma)
        coeffs[-1] += Lambda
        roots = np.roots(coeffs)
    else:
        raise DomainError(f"no_delay_stability supports asymmetric rates only up to N={_POLY_DEGREE_CAP}")
    abscissa = float(np.max(roots.real))
    return NoDelayStability(stable=abscissa < 0.0, abscissa=abscissa, roots=roots)


def routh_hurwitz_n3(gamma, Lambda: float) -> bool:
    g1, g2, g3 = (float(g) for g in gamma)
    return (g1 + g2 + g3) * (g1 * g2 + g2 * g3 + g1 * g3) > g1 * g2 * g3 + Lambda


def ngene_transversality_identity_check(loop: CyclicLoopParams, hopf: CyclicHopf, k: int = 0) -> float:
    """
    Largest discrepancy between the implicit-derivative value of (dmu/dtau)^-1
    at (i omega_c, tau_c^(k)) and S1 + i (S2 + tau)/omega_c, and between the
    inverted closed forms and the same quantity.
    """
    mu = 1j * hopf.omega_c
    tau = hopf.tau_branch(k)
    gamma = np.asarray(loop.gamma, dtype=float)
    P = complex(np.prod(mu + gamma))
    dP = P * complex(np.sum(1.0 / (mu + gamma)))
    lam_exp = hopf.Lambda * cmath.exp(-mu * tau)
    inverse = (dP - tau * lam_exp) / (lam_exp * mu)
    expected = complex(hopf.S1, (hopf.S2 + tau) / hopf.omega_c)
    re, im = ngene_transversality(hopf, k)
    closed = 1.0 / complex(re, im)
    return max(abs(inverse - expected), abs(closed - expected))
