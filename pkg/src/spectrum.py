from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import optimize

from .cyclic import loop_gain
from .errors import ConvergenceError, DomainError
from .models import CyclicLoopParams, RootPath

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
MAX_HALVINGS = 8
FD_STEP = 1e-4


@dataclass(frozen=True)
class Characteristic:
    """prod_i (mu + gamma_i) + Lambda exp(-mu tau) with its mu-derivative."""

    gamma: Tuple[float, ...]
    Lambda: float

    @classmethod
    def from_gains(cls, A: float, B: float, gamma1: float, gamma2: float) -> "Characteristic":
        return cls(gamma=(gamma1, gamma2), Lambda=A * B)

    @classmethod
    def from_loop(cls, loop: CyclicLoopParams) -> "Characteristic":
        return cls(gamma=tuple(loop.gamma), Lambda=loop_gain(loop))

    def value(self, mu: complex, tau: float) -> complex:
        p = complex(1.0)
        for g in self.gamma:
            p *= mu + g
        return p + self.Lambda * cmath.exp(-mu * tau)

    def derivative(self, mu: complex, tau: float) -> complex:
        total = complex(0.0)
        for j in range(len(self.gamma)):
            term = complex(1.0)
            for i, g in enumerate(self.gamma):
                if i != j:
                    term *= mu + g
            total += term
        return total - self.Lambda * tau * cmath.exp(-mu * tau)

    def delay_free_seed(self) -> complex:
        """Leading upper-half-plane root of the delay-free polynomial."""
        coeffs = np.poly(-np.asarray(self.gamma, dtype=float)).astype(complex)
        coeffs[-1] += self.Lambda
        roots = np.roots(coeffs)
        upper = roots[roots.imag >= 0.0]
        return complex(upper[np.argmax(upper.real)])


def _newton(char: Characteristic, mu0: complex, tau: float, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> Tuple[complex, int]:
    mu = complex(mu0)
    residual = abs(char.value(mu, tau))
    for it in range(1, max_iter + 1):
        if residual < tol:
            return mu, it - 1
        slope = char.derivative(mu, tau)
        if slope == 0.0:
            break
        mu = mu - char.value(mu, tau) / slope
        residual = abs(char.value(mu, tau))
        if not math.isfinite(residual):
            break
    if residual < tol:
        return mu, max_iter
    raise ConvergenceError(
        f"newton_root failed at tau={tau:.6g}: residual {residual:.3e} after {max_iter} iterations",
        last_iterate=mu,
        residual=residual,
    )


def newton_root(char: Characteristic, mu0: complex, tau: float) -> complex:
    """Root of the characteristic function near mu0 with |Delta| < 1e-12."""
    return _newton(char, mu0, tau)[0]


def _advance(char: Characteristic, mu: complex, tau_from: float, tau_to: float) -> Tuple[complex, int]:
    try:
        return _newton(char, mu, tau_to)
    except ConvergenceError:
        pass
    for m in range(1, MAX_HALVINGS + 1):
        n_sub = 2**m
        logger.warning("Continuation step %.4g -> %.4g split into %d substeps", tau_from, tau_to, n_sub)
        current, iters = mu, 0
        try:
            for k in range(1, n_sub + 1):
                current, it = _newton(char, current, tau_from + (tau_to - tau_from) * k / n_sub)
                iters += it
            return current, iters
        except ConvergenceError:
            continue
    raise ConvergenceError(f"continuation stalled between tau={tau_from:.6g} and {tau_to:.6g}", last_iterate=mu)


def _locate_crossing(char: Characteristic, tau_a: float, mu_a: complex, tau_b: float) -> Tuple[float, float]:
    def real_part(tau: float) -> float:
        return _advance(char, mu_a, tau_a, tau)[0].real

    tau_x = optimize.brentq(real_part, tau_a, tau_b, xtol=1e-10)
    mu_x, _ = _advance(char, mu_a, tau_a, tau_x)
    return float(tau_x), float(mu_x.imag)


def continue_root(char: Characteristic, tau_grid: Sequence[float]) -> RootPath:
    """
    Trace the leading root from its delay-free value along an ascending
    delay grid; each point is seeded by the previous root.
    """
    grid = np.asarray(tau_grid, dtype=float)
    if len(grid) == 0 or np.any(np.diff(grid) <= 0.0) or grid[0] < 0.0:
        raise DomainError("tau grid must be non-negative and strictly ascending")
    mu, tau_prev = char.delay_free_seed(), 0.0
    taus: List[float] = []
    roots: List[complex] = []
    iterations = 0
    truncated = False
    for tau in grid:
        try:
            mu, it = _advance(char, mu, tau_prev, float(tau))
        except ConvergenceError as exc:
            logger.warning("Root path truncated at tau=%.6g: %s (residual %s)", tau, exc, exc.residual)
            truncated = True
            break
        iterations += it
        taus.append(float(tau))
        roots.append(mu)
        tau_prev = float(tau)

    tau_cross = omega_cross = None
    re = np.array([r.real for r in roots])
    for k in range(len(re) - 1):
        if re[k] < 0.0 <= re[k + 1]:
            tau_cross, omega_cross = _locate_crossing(char, taus[k], roots[k], taus[k + 1])
            break
    return RootPath(
        taus=np.asarray(taus),
        roots=np.asarray(roots, dtype=complex),
        tau_cross=tau_cross,
        omega_cross=omega_cross,
        newton_iterations=iterations,
        truncated=truncated,
    )


def local_fd_slope(char: Characteristic, mu_seed: complex, tau: float, h: float = FD_STEP) -> complex:
    """Central-difference dmu/dtau of the root branch through mu_seed at tau."""
    mu0 = newton_root(char, mu_seed, tau)
    mu_plus = newton_root(char, mu0, tau + h)
    mu_minus = newton_root(char, mu0, tau - h)
    return (mu_plus - mu_minus) / (2.0 * h)


def fd_transversality(char: Characteristic, path: RootPath, tau: float, h: float = FD_STEP) -> complex:
    if len(path.taus) == 0 or tau - h < path.taus[0] or tau + h > path.taus[-1]:
        raise DomainError(f"root path does not cover [{tau - h}, {tau + h}]")
    seed = complex(np.interp(tau, path.taus, path.roots.real), np.interp(tau, path.taus, path.roots.imag))
    return local_fd_slope(char, seed, tau, h)


def tangent_angle_deg(slope: complex) -> float:
    """Angle of the root velocity below the horizontal."""
    return math.degrees(math.atan(abs(slope.imag) / slope.real))
