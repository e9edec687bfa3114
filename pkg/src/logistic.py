from __future__ import annotations

import logging
import math
from typing import Iterable, Tuple

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.special import expit

from .errors import BracketError, DomainError
from .models import (
    Equilibrium,
    HillCounterpart,
    HillParams,
    SteepnessAsymptotics,
    TaylorCoefficients,
    TwoGeneParams,
)

logger = logging.getLogger(__name__)

_BISECT_WIDTH = 1e-6
_NEWTON_MAX_ITER = 30


def f_plus(x, theta, lam):
    """Increasing logistic activation 1/(1+exp(-lam (x - theta)))."""
    value = expit(lam * (np.asarray(x, dtype=float) - theta))
    return float(value) if np.ndim(value) == 0 else value


def f_minus(x, theta, lam):
    """Decreasing logistic repression, the exact complement of f_plus."""
    return 1.0 - f_plus(x, theta, lam)


def logistic_derivative(x, theta, lam, order: int = 1):
    if order not in (1, 2, 3):
        raise DomainError(f"logistic_derivative supports order 1, 2 or 3, got {order!r}")
    f = f_plus(x, theta, lam)
    s = f * (1.0 - f)
    if order == 1:
        return lam * s
    if order == 2:
        return lam**2 * s * (1.0 - 2.0 * f)
    return lam**3 * s * (1.0 - 6.0 * s)


def _equilibrium_map(params: TwoGeneParams, x1: float) -> float:
    x2 = params.M2 * f_plus(x1, params.theta1, params.lam)
    return params.kappa1 * f_minus(x2, params.theta2, params.lam) - params.gamma1 * x1


def _equilibrium_map_slope(params: TwoGeneParams, x1: float) -> float:
    fp = f_plus(x1, params.theta1, params.lam)
    x2 = params.M2 * fp
    fm = f_minus(x2, params.theta2, params.lam)
    gain = params.kappa1 * params.kappa2 / params.gamma2 * params.lam**2
    return -params.gamma1 - gain * fm * (1.0 - fm) * fp * (1.0 - fp)


def _build_equilibrium(params: TwoGeneParams, x1: float) -> Equilibrium:
    fp = f_plus(x1, params.theta1, params.lam)
    x2 = params.M2 * fp
    fm = f_minus(x2, params.theta2, params.lam)
    A = params.kappa2 * params.lam * fp * (1.0 - fp)
    B = params.kappa1 * params.lam * fm * (1.0 - fm)
    return Equilibrium(x1_star=float(x1), x2_star=float(x2), fplus_star=float(fp), fminus_star=float(fm), A=float(A), B=float(B))


def solve_equilibrium(params: TwoGeneParams) -> Equilibrium:
    """
    Unique positive equilibrium of the two-gene loop.

    The scalar map g(x1) = kappa1 f-(M2 f+(x1)) - gamma1 x1 is strictly
    decreasing with g(0) > 0 > g(M1). Bisection narrows the root to a
    bracket of width 1e-6, then Newton with the closed-form slope polishes it.
    """
    lo, hi = 0.0, params.M1
    x1 = optimize.bisect(lambda x: _equilibrium_map(params, x), lo, hi, xtol=_BISECT_WIDTH)
    for _ in range(_NEWTON_MAX_ITER):
        g = _equilibrium_map(params, x1)
        step = g / _equilibrium_map_slope(params, x1)
        candidate = x1 - step
        if not (lo < candidate < hi):
            break
        x1 = candidate
        if abs(step) <= 4.0 * np.finfo(float).eps * max(1.0, abs(x1)):
            break
    return _build_equilibrium(params, x1)


def equilibrium_residuals(params: TwoGeneParams, eq: Equilibrium) -> Tuple[float, float]:
    r1 = params.kappa1 * f_minus(eq.x2_star, params.theta2, params.lam) - params.gamma1 * eq.x1_star
    r2 = params.kappa2 * f_plus(eq.x1_star, params.theta1, params.lam) - params.gamma2 * eq.x2_star
    return abs(r1) / (params.gamma1 * eq.x1_star), abs(r2) / (params.gamma2 * eq.x2_star)


def taylor_coefficients(params: TwoGeneParams, eq: Equilibrium) -> TaylorCoefficients:
    lam = params.lam
    fm, fp = eq.fminus_star, eq.fplus_star
    b1 = 0.5 * eq.B * lam * (1.0 - 2.0 * fm)
    b2 = 0.5 * eq.A * lam * (1.0 - 2.0 * fp)
    d1 = -eq.B * lam**2 * (1.0 - 6.0 * fm * (1.0 - fm)) / 6.0
    d2 = eq.A * lam**2 * (1.0 - 6.0 * fp * (1.0 - fp)) / 6.0
    return TaylorCoefficients(b1=b1, b2=b2, d1=d1, d2=d2)


def gain_of_lambda(base: TwoGeneParams, lam: float) -> float:
    if not (lam > 0.0):
        raise DomainError(f"lambda must be positive, got {lam!r}")
    return solve_equilibrium(base.with_lambda(lam)).AB


def gain_curve(base: TwoGeneParams, lambdas: Iterable[float]) -> pd.DataFrame:
    lams = np.asarray(list(lambdas), dtype=float)
    gains = np.array([gain_of_lambda(base, lam) for lam in lams])
    monotone = bool(np.all(np.diff(gains) > 0.0)) if len(gains) > 1 else True
    if not monotone:
        bad = lams[1:][np.diff(gains) <= 0.0]
        logger.warning("Loop gain is not increasing in lambda near %s", np.array2string(bad, precision=4))
    return pd.DataFrame(
        {
            "lambda": lams,
            "AB": gains,
            "AB_over_lambda_sq": gains / lams**2,
            "monotone": monotone,
        }
    )


def _require_interior_thresholds(params: TwoGeneParams) -> None:
    if not (0.0 < params.theta1 < params.M1) or not (0.0 < params.theta2 < params.M2):
        raise DomainError(
            f"thresholds must satisfy 0 < theta_i < M_i, got theta=({params.theta1}, {params.theta2}) "
            f"M=({params.M1}, {params.M2})"
        )


def lambda_lower_bound(base: TwoGeneParams) -> float:
    return 4.0 * math.sqrt(base.gamma1 * base.gamma2) / math.sqrt(base.kappa1 * base.kappa2)


def critical_steepness(base: TwoGeneParams, *, max_doublings: int = 60) -> float:
    """Smallest lambda at which the loop gain reaches gamma1 gamma2."""
    _require_interior_thresholds(base)
    target = base.gamma1 * base.gamma2

    def excess(lam: float) -> float:
        return gain_of_lambda(base, lam) - target

    lo = lambda_lower_bound(base)
    f_lo = excess(lo)
    if f_lo > 0.0:
        raise BracketError(f"critical_steepness failed: gain {f_lo + target} exceeds gamma1*gamma2 at the lower bound {lo}")
    hi = 2.0 * lo
    for _ in range(max_doublings):
        if excess(hi) > 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError(f"critical_steepness failed: no sign change of AB - gamma1*gamma2 up to lambda={hi}")

    grid = np.geomspace(lambda_lower_bound(base), hi, 24)
    gain_curve(base, grid)  # warns on non-monotone gain

    lam_c = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=4.0 * np.finfo(float).eps)
    logger.debug("critical steepness %.10f in [%g, %g]", lam_c, lo, hi)
    return float(lam_c)


def steepness_asymptotics(params: TwoGeneParams) -> SteepnessAsymptotics:
    _require_interior_thresholds(params)
    k1, k2 = params.kappa1, params.kappa2
    g1, g2 = params.gamma1, params.gamma2
    M1, M2 = params.M1, params.M2
    th1, th2 = params.theta1, params.theta2
    c0 = k1 * k2 / 16.0
    c_inf = (g1 * g2) ** 2 * th1 * (M1 - th1) * th2 * (M2 - th2) / (k1 * k2)
    return SteepnessAsymptotics(
        c0=c0,
        c_inf=c_inf,
        xi1=math.log(th2 / (M2 - th2)),
        xi2=math.log((M1 - th1) / th1),
    )


def hill_plus(x, theta, n):
    """Hill activation x^n / (theta^n + x^n), evaluated as a logistic in log(x/theta)."""
    return float(expit(n * math.log(x / theta))) if x > 0.0 else 0.0


def hill_derivative(x, theta, n):
    if x <= 0.0:
        raise DomainError("Hill derivative is only evaluated for x > 0")
    h = hill_plus(x, theta, n)
    return n * h * (1.0 - h) / x


def hill_counterpart(params: TwoGeneParams) -> HillCounterpart:
    """Hill model with exponents n_i = lam * theta_i, matching slope at the threshold."""
    if not (params.theta1 > 0.0 and params.theta2 > 0.0):
        raise DomainError("Hill counterpart needs positive thresholds")
    n1 = params.lam * params.theta1
    n2 = params.lam * params.theta2

    def g(x1: float) -> float:
        x2 = params.M2 * hill_plus(x1, params.theta1, n1)
        return params.kappa1 * (1.0 - hill_plus(x2, params.theta2, n2)) - params.gamma1 * x1

    x1 = optimize.brentq(g, 1e-12 * params.M1, params.M1, xtol=1e-15, rtol=4.0 * np.finfo(float).eps)
    hp = hill_plus(x1, params.theta1, n1)
    x2 = params.M2 * hp
    hm = 1.0 - hill_plus(x2, params.theta2, n2)
    eq = Equilibrium(
        x1_star=float(x1),
        x2_star=float(x2),
        fplus_star=hp,
        fminus_star=hm,
        A=params.kappa2 * hill_derivative(x1, params.theta1, n1),
        B=params.kappa1 * hill_derivative(x2, params.theta2, n2),
    )
    return HillCounterpart(hill=HillParams(n1=n1, n2=n2), equilibrium=eq)
