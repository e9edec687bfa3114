from __future__ import annotations

import cmath
import logging
import math
from typing import Dict, List, Optional, Tuple

from scipy import optimize

from .errors import DomainError
from .logistic import solve_equilibrium
from .models import (
    Equilibrium,
    HopfEigenvector,
    HopfPoint,
    NormalFormC1,
    StabilityClass,
    Transversality,
    TwoGeneParams,
)

logger = logging.getLogger(__name__)

_GAIN_CEILING = 1e6


def char_eval(mu: complex, tau: float, A: float, B: float, gamma1: float, gamma2: float) -> complex:
    """Characteristic function (mu + gamma1)(mu + gamma2) + AB exp(-mu tau)."""
    return (mu + gamma1) * (mu + gamma2) + A * B * cmath.exp(-mu * tau)


def _omega_from_gain(AB: float, gamma1: float, gamma2: float) -> Optional[float]:
    if AB <= gamma1 * gamma2:
        return None
    disc = math.sqrt((gamma1**2 - gamma2**2) ** 2 + 4.0 * AB**2)
    p_plus = 0.5 * (-(gamma1**2 + gamma2**2) + disc)
    if p_plus <= 0.0:
        return None
    return math.sqrt(p_plus)


def _tau_c_from_omega(omega: float, gamma1: float, gamma2: float) -> float:
    angle = math.atan2(omega * (gamma1 + gamma2), omega**2 - gamma1 * gamma2)
    if angle <= 0.0:
        angle += 2.0 * math.pi
    return angle / omega


def hopf_frequency(A: float, B: float, gamma1: float, gamma2: float) -> Optional[float]:
    """Hopf angular frequency, or None when AB <= gamma1 gamma2 (absolute stability)."""
    return _omega_from_gain(A * B, gamma1, gamma2)


def critical_delays(A: float, B: float, gamma1: float, gamma2: float, k_max: int = 2) -> List[HopfPoint]:
    """Critical delay branches tau_c + 2 pi k / omega_c for k = 0..k_max; empty for weak feedback."""
    omega = hopf_frequency(A, B, gamma1, gamma2)
    if omega is None:
        return []
    tau_c = _tau_c_from_omega(omega, gamma1, gamma2)
    return [HopfPoint(omega_c=omega, tau_c=tau_c, branch_k=k) for k in range(k_max + 1)]


def _require_hopf(A: float, B: float, gamma1: float, gamma2: float) -> HopfPoint:
    branches = critical_delays(A, B, gamma1, gamma2, k_max=0)
    if not branches:
        raise DomainError(f"no Hopf point: AB={A * B:.6g} <= gamma1*gamma2={gamma1 * gamma2:.6g}")
    return branches[0]


def dmu_dtau(mu: complex, tau: float, gamma1: float, gamma2: float) -> complex:
    """Root velocity along a characteristic root, using AB exp(-mu tau) = -(mu+gamma1)(mu+gamma2)."""
    p = (mu + gamma1) * (mu + gamma2)
    return -mu * p / (2.0 * mu + gamma1 + gamma2 + tau * p)


def transversality(A: float, B: float, gamma1: float, gamma2: float, branch_k: int = 0) -> Transversality:
    hopf = _require_hopf(A, B, gamma1, gamma2)
    omega = hopf.omega_c
    AB = A * B
    tau = hopf.tau_c + 2.0 * math.pi * branch_k / omega
    numerator = omega**2 * (2.0 * omega**2 + gamma1**2 + gamma2**2)
    second = (2.0 * omega + tau * omega * (gamma1 + gamma2)) ** 2
    denom = (gamma1 + gamma2 - tau * (omega**2 - gamma1 * gamma2)) ** 2 + second
    re = numerator / denom
    im = -omega * ((gamma1 + gamma2) * (omega**2 + gamma1 * gamma2) + tau * AB**2) / denom
    lower = numerator / ((gamma1 + gamma2 + tau * AB) ** 2 + second)
    return Transversality(re=re, im=im, lower_bound=lower, branch_k=branch_k)


def linear_period_slope(hopf: HopfPoint, trans: Transversality) -> float:
    """Onset period slope dT/dtau predicted by the linear root motion alone."""
    return -(hopf.T_c / hopf.omega_c) * trans.im


def hopf_eigenvector(B: float, gamma1: float, omega_c: float, tau2: float) -> HopfEigenvector:
    """Critical eigenvector normalised so that its second component is 1."""
    q1 = -B * cmath.exp(-1j * omega_c * tau2) / (1j * omega_c + gamma1)
    return HopfEigenvector(q1=q1, q1_amp_sq=B**2 / (omega_c**2 + gamma1**2))


def classify_stability(params: TwoGeneParams, eq: Optional[Equilibrium] = None) -> StabilityClass:
    """Linear stability of the equilibrium at the total delay params.tau."""
    if eq is None:
        eq = solve_equilibrium(params)
    omega = hopf_frequency(eq.A, eq.B, params.gamma1, params.gamma2)
    if omega is None:
        return StabilityClass(kind="absolutely-stable")
    tau_c = _tau_c_from_omega(omega, params.gamma1, params.gamma2)
    tau = params.tau
    if tau < tau_c:
        return StabilityClass(kind="stable-below-onset")
    crossings = int(math.floor((tau - tau_c) * omega / (2.0 * math.pi))) + 1
    return StabilityClass(kind="unstable", crossings=crossings)


def solve_gain_for_delay(gamma1: float, gamma2: float, tau_target: float) -> Tuple[float, HopfPoint]:
    """Loop gain AB whose first critical delay equals tau_target; tau_c decreases in AB."""
    if not (tau_target > 0.0):
        raise DomainError(f"tau_target must be positive, got {tau_target!r}")

    def excess(AB: float) -> float:
        omega = _omega_from_gain(AB, gamma1, gamma2)
        if omega is None:
            return math.inf
        return _tau_c_from_omega(omega, gamma1, gamma2) - tau_target

    lo = gamma1 * gamma2 * (1.0 + 1e-9)
    hi = _GAIN_CEILING
    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo > 0.0 > f_hi):
        raise DomainError(
            f"solve_gain_for_delay failed: tau_target={tau_target} outside the bracket "
            f"AB in [{lo:.6g}, {hi:.6g}] (tau_c excess {f_lo:.3g}, {f_hi:.3g})"
        )
    AB = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)
    omega = _omega_from_gain(AB, gamma1, gamma2)
    hopf = HopfPoint(omega_c=omega, tau_c=_tau_c_from_omega(omega, gamma1, gamma2))
    logger.debug("gain %.8g gives tau_c %.10g", AB, hopf.tau_c)
    return float(AB), hopf


def extract_c1(
    hopf: HopfPoint,
    trans: Transversality,
    q: HopfEigenvector,
    amp_prefactor_sq: float,
    period_slope: float,
) -> NormalFormC1:
    """
    First Lyapunov coefficient from two measured onset quantities:
    the x1 amplitude law A^2 ~ c^2 (tau - tau_c) and the period slope dT/dtau.
    """
    if not (amp_prefactor_sq > 0.0):
        raise DomainError(f"amplitude prefactor c^2 must be positive, got {amp_prefactor_sq!r}")
    re_c1 = -4.0 * q.q1_amp_sq * trans.re / amp_prefactor_sq
    ratio = (period_slope * hopf.omega_c / hopf.T_c + trans.im) / trans.re
    return NormalFormC1(re_c1=re_c1, im_c1=ratio * re_c1, ratio=ratio)


def hopf_discrepancy(
    reference: Tuple[float, float],
    candidate: Tuple[float, float],
    gamma1: float,
    gamma2: float,
) -> Dict[str, float]:
    """Percentage differences of the Hopf locus of `candidate` gains (A, B) relative to `reference`."""
    ref = _require_hopf(reference[0], reference[1], gamma1, gamma2)
    cand = _require_hopf(candidate[0], candidate[1], gamma1, gamma2)

    def pct(a: float, b: float) -> float:
        return 100.0 * abs(b - a) / abs(a)

    return {
        "tau_c_pct": pct(ref.tau_c, cand.tau_c),
        "omega_c_pct": pct(ref.omega_c, cand.omega_c),
        "T_c_pct": pct(ref.T_c, cand.T_c),
    }
