from __future__ import annotations

import cmath
import logging
import math
import multiprocessing as mp
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import DegenerateSystemError, DomainError, NumericalError, PreconditionError
from .hopf import critical_delays
from .logistic import solve_equilibrium, taylor_coefficients
from .models import Equilibrium, HopfPoint, LyapunovResult, TaylorCoefficients, TwoGeneParams

logger = logging.getLogger(__name__)

_DET_FLOOR = 1e-12
_RESONANCE_FLOOR = 1e-10


def _transversality_sums(omega: float, gamma1: float, gamma2: float) -> Tuple[float, float]:
    w1 = 1.0 / (omega**2 + gamma1**2)
    w2 = 1.0 / (omega**2 + gamma2**2)
    return w1 + w2, gamma1 * w1 + gamma2 * w2


def _solve2(M: np.ndarray, rhs: np.ndarray) -> Tuple[np.ndarray, complex]:
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    x0 = (rhs[0] * M[1, 1] - M[0, 1] * rhs[1]) / det
    x1 = (M[0, 0] * rhs[1] - M[1, 0] * rhs[0]) / det
    return np.array([x0, x1]), det


def split_params(params: TwoGeneParams, hopf: HopfPoint, fraction: float = 0.5) -> TwoGeneParams:
    """Place the loop at its critical delay with tau1 = fraction * tau_c."""
    if not (0.0 <= fraction <= 1.0):
        raise DomainError(f"split fraction must lie in [0, 1], got {fraction!r}")
    return params.with_delays(fraction * hopf.tau_c, (1.0 - fraction) * hopf.tau_c)


def symmetric_lyapunov(params: TwoGeneParams, eq: Equilibrium, hopf: HopfPoint) -> LyapunovResult:
    """
    Closed-form criticality for thresholds at half the carrying capacities,
    where the quadratic Taylor terms vanish.
    """
    if not params.has_symmetric_thresholds(rel_tol=1e-9):
        raise PreconditionError(
            f"symmetric_lyapunov needs theta_i = M_i/2, got theta=({params.theta1}, {params.theta2}) "
            f"M/2=({params.M1 / 2}, {params.M2 / 2}); use general_lyapunov for asymmetric thresholds"
        )
    omega, tau_c = hopf.omega_c, hopf.tau_c
    lam = params.lam
    S1, S2 = _transversality_sums(omega, params.gamma1, params.gamma2)
    q2 = eq.A * cmath.exp(-0.5j * omega * tau_c) / (1j * omega + params.gamma2)
    q2_sq = (omega**2 + params.gamma1**2) / eq.B**2
    G = lam**2 * (1.0 + q2_sq) / 4.0
    Omega2 = -G / (omega * S1)
    T_coeff = G * (S2 + tau_c) / (omega**2 * S1)
    return LyapunovResult(
        T_coeff=T_coeff,
        Omega2=Omega2,
        q2=q2,
        W0=np.zeros(2),
        W2=np.zeros(2, dtype=complex),
        P=complex(-(S2 + tau_c), omega * S1),
        Q0=1.0 + 0.0j,
        G=complex(G, 0.0),
        S1=S1,
        S2=S2,
        omega_c=omega,
        tau_c=tau_c,
    )


def general_lyapunov(
    params: TwoGeneParams,
    eq: Equilibrium,
    hopf: HopfPoint,
    taylor: TaylorCoefficients,
) -> LyapunovResult:
    """
    Criticality coefficient T and frequency correction Omega2 of the
    asymmetric loop from the third-order solvability condition

        -i P Omega2 + i omega_c Q0 T + G = 0.

    `params` must carry an explicit split with tau1 + tau2 = tau_c; the
    result does not depend on how the delay is split.
    """
    omega, tau_c = hopf.omega_c, hopf.tau_c
    tau1, tau2 = params.tau1, params.tau2
    if not math.isclose(tau1 + tau2, tau_c, rel_tol=1e-9, abs_tol=1e-15):
        raise PreconditionError(f"delay split ({tau1}, {tau2}) does not sum to tau_c={tau_c}")
    A, B = eq.A, eq.B
    g1, g2 = params.gamma1, params.gamma2
    b1, b2, d1, d2 = taylor.b1, taylor.b2, taylor.d1, taylor.d2

    e1 = cmath.exp(-1j * omega * tau1)
    e2 = cmath.exp(-1j * omega * tau2)
    q2 = A * e1 / (1j * omega + g2)
    q2_sq = abs(q2) ** 2

    # zero-frequency response
    L = np.array([[-g1, -B], [A, -g2]], dtype=complex)
    F0 = np.array([2.0 * b1 * q2_sq, 2.0 * b2], dtype=complex)
    W0, det_L = _solve2(L, -F0)
    # second-harmonic response
    D2 = np.array(
        [[2j * omega + g1, B * e2**2], [-A * e1**2, 2j * omega + g2]],
        dtype=complex,
    )
    F2 = np.array([b1 * q2**2 * e2**2, b2 * e1**2], dtype=complex)
    W2, det_D2 = _solve2(D2, F2)
    if abs(det_L) < _RESONANCE_FLOOR or abs(det_D2) < _RESONANCE_FLOOR:
        raise DegenerateSystemError(
            f"general_lyapunov failed: resonant linear operator |det L|={abs(det_L):.3g}, "
            f"|det Delta(2i omega)|={abs(det_D2):.3g}"
        )

    varpi = A * e1 / (1j * omega + g1)
    zeta = q2 * e2
    P = (varpi + q2) - B * zeta * varpi * tau2 + A * e1 * tau1
    Q0 = B * zeta * varpi * (tau2 / tau_c) - A * e1 * (tau1 / tau_c)
    G_cub = 3.0 * (varpi * d1 * q2_sq * zeta + d2 * e1)
    G_quad = 2.0 * varpi * b1 * e2 * (q2 * W0[1] + q2.conjugate() * W2[1]) + 2.0 * b2 * e1 * (W0[0] + W2[0])
    G = G_cub + G_quad

    det = omega * (P.imag * Q0.real - P.real * Q0.imag)
    if abs(det) < _DET_FLOOR:
        raise DegenerateSystemError(f"general_lyapunov failed: solvability determinant {det:.3g}")
    Omega2 = (-G.real * omega * Q0.real - omega * Q0.imag * G.imag) / det
    T_coeff = (-P.imag * G.imag - G.real * P.real) / det

    S1, S2 = _transversality_sums(omega, g1, g2)
    return LyapunovResult(
        T_coeff=float(T_coeff),
        Omega2=float(Omega2),
        q2=complex(q2),
        W0=W0.real.copy(),
        W2=W2,
        P=complex(P),
        Q0=complex(Q0),
        G=complex(G),
        S1=S1,
        S2=S2,
        omega_c=omega,
        tau_c=tau_c,
    )


def solvability_residual(result: LyapunovResult) -> float:
    return abs(-1j * result.P * result.Omega2 + 1j * result.omega_c * result.Q0 * result.T_coeff + result.G)


def amplitude_law(result: LyapunovResult, tau: float) -> Tuple[float, float, float]:
    """Onset amplitudes (A1, A2) and angular frequency of the bifurcating cycle."""
    if not (tau > result.tau_c):
        raise DomainError(f"amplitude law needs tau > tau_c={result.tau_c}, got {tau}")
    if not result.supercritical:
        raise DomainError(f"subcritical case (T={result.T_coeff:.6g}): no small stable cycle beyond tau_c")
    excess = (tau - result.tau_c) / result.T_coeff
    A1 = 2.0 * math.sqrt(excess)
    return A1, abs(result.q2) * A1, result.omega_c + result.Omega2 * excess


def simulated_criticality(prefactor: float) -> float:
    """Criticality implied by a fitted amplitude law A1 = c sqrt(tau - tau_c)."""
    if not (prefactor > 0.0):
        raise DomainError(f"prefactor must be positive, got {prefactor!r}")
    return 4.0 / prefactor**2


# ---------------------------------------------------------------- Monte-Carlo sweep


@dataclass(frozen=True)
class CriticalityRegion:
    kappa: Tuple[float, float] = (0.5, 10.0)
    gamma: Tuple[float, float] = (0.05, 2.0)
    lam: Tuple[float, float] = (0.5, 10.0)
    theta_fraction: Tuple[float, float] = (0.05, 0.95)


@dataclass
class CriticalitySummary:
    accepted: int
    rejected: int
    failed: int
    fraction_positive: float
    min_T: Optional[float]
    samples: pd.DataFrame
    nonpositive: pd.DataFrame = field(default_factory=pd.DataFrame)
    failures: List[Dict[str, object]] = field(default_factory=list)


def _log_uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def draw_params(seed: int, index: int, region: CriticalityRegion) -> TwoGeneParams:
    rng = np.random.default_rng([seed, index])
    kappa1 = _log_uniform(rng, region.kappa)
    kappa2 = _log_uniform(rng, region.kappa)
    gamma1 = _log_uniform(rng, region.gamma)
    gamma2 = _log_uniform(rng, region.gamma)
    lam = _log_uniform(rng, region.lam)
    lo, hi = region.theta_fraction
    theta1 = rng.uniform(lo, hi) * kappa1 / gamma1
    theta2 = rng.uniform(lo, hi) * kappa2 / gamma2
    return TwoGeneParams(
        kappa1=kappa1, gamma1=gamma1, kappa2=kappa2, gamma2=gamma2, theta1=float(theta1), theta2=float(theta2), lam=lam
    )


def _criticality_sample(task: Tuple[int, int, CriticalityRegion]) -> Dict[str, object]:
    seed, index, region = task
    params = draw_params(seed, index, region)
    row: Dict[str, object] = {
        "sample": index,
        "kappa1": params.kappa1,
        "gamma1": params.gamma1,
        "kappa2": params.kappa2,
        "gamma2": params.gamma2,
        "theta1": params.theta1,
        "theta2": params.theta2,
        "lambda": params.lam,
    }
    try:
        eq = solve_equilibrium(params)
        row["AB"] = eq.AB
        branches = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)
        if not branches:
            row["status"] = "rejected"
            return row
        hopf = branches[0]
        result = general_lyapunov(split_params(params, hopf), eq, hopf, taylor_coefficients(params, eq))
    except (NumericalError, DomainError) as exc:
        row["status"] = "failed"
        row["error"] = str(exc)
        return row
    row.update(
        {
            "omega_c": hopf.omega_c,
            "tau_c": hopf.tau_c,
            "T_coeff": result.T_coeff,
            "Omega2": result.Omega2,
            "status": "accepted",
        }
    )
    return row


def montecarlo_criticality(
    n_samples: int,
    seed: int,
    *,
    region: Optional[CriticalityRegion] = None,
    threads: int = 1,
    max_draw_factor: int = 50,
) -> CriticalitySummary:
    """
    Sign of the criticality coefficient over random strong-feedback loops.

    Draw i uses the generator seeded by (seed, i), so the summary is
    independent of the worker count. Weak-feedback draws are discarded
    and counted; the first n_samples accepted draws (by index) are kept.
    """
    region = region or CriticalityRegion()
    columns = ["sample", "kappa1", "gamma1", "kappa2", "gamma2", "theta1", "theta2", "lambda", "AB", "omega_c", "tau_c", "T_coeff", "Omega2"]
    if n_samples <= 0:
        return CriticalitySummary(0, 0, 0, 1.0, None, pd.DataFrame(columns=columns))

    rows: List[Dict[str, object]] = []
    batch = max(64, n_samples)
    start = 0
    max_draws = max_draw_factor * n_samples + 100
    pool = mp.Pool(processes=threads) if threads > 1 else None
    try:
        while start < max_draws:
            tasks = [(seed, i, region) for i in range(start, min(start + batch, max_draws))]
            if pool is None:
                rows.extend(_criticality_sample(t) for t in tasks)
            else:
                rows.extend(pool.imap_unordered(_criticality_sample, tasks, chunksize=16))
            start += len(tasks)
            if sum(1 for r in rows if r["status"] == "accepted") >= n_samples:
                break
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    rows.sort(key=lambda r: int(r["sample"]))
    kept: List[Dict[str, object]] = []
    rejected = 0
    failures: List[Dict[str, object]] = []
    for r in rows:
        if len(kept) >= n_samples:
            break
        if r["status"] == "accepted":
            kept.append(r)
        elif r["status"] == "rejected":
            rejected += 1
        else:
            failures.append(r)
            logger.warning("Criticality sample %s failed: %s", r["sample"], r.get("error"))
    if len(kept) < n_samples:
        logger.warning("Only %d of %d strong-feedback samples found in %d draws", len(kept), n_samples, start)

    samples = pd.DataFrame(kept, columns=columns)
    positive = samples["T_coeff"] > 0.0
    nonpositive = samples[~positive]
    for _, r in nonpositive.iterrows():
        logger.warning("Non-positive criticality: %s", r.to_dict())
    return CriticalitySummary(
        accepted=len(samples),
        rejected=rejected,
        failed=len(failures),
        fraction_positive=float(positive.mean()) if len(samples) else 1.0,
        min_T=float(samples["T_coeff"].min()) if len(samples) else None,
        samples=samples,
        nonpositive=nonpositive,
        failures=failures,
    )
