from __future__ import annotations

import logging
import math
import multiprocessing as mp
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .dde import component_lag, integrate, measure_cycle
from .errors import DomainError, NumericalError
from .hopf import critical_delays
from .logistic import solve_equilibrium
from .models import Equilibrium, HopfPoint, RelaxationOffsets, TwoGeneParams

logger = logging.getLogger(__name__)

AMPLITUDE_WINDOW = (300.0, 400.0)
ONSET_WINDOW = (400.0, 600.0)
HISTORY_OFFSET = 0.05


def onset_history(eq: Equilibrium) -> Tuple[float, float]:
    return eq.x1_star + HISTORY_OFFSET, max(0.0, eq.x2_star - HISTORY_OFFSET)


def _hopf_or_fail(params: TwoGeneParams, eq: Equilibrium) -> HopfPoint:
    branches = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)
    if not branches:
        raise DomainError(f"no Hopf point for these parameters (AB={eq.AB:.4g})")
    return branches[0]


def map_ordered(func: Callable[[Dict], Dict], tasks: List[Dict], threads: int = 1) -> List[Dict]:
    """Run tasks inline or on a process pool; results come back in task order."""
    indexed = [dict(task, index=i) for i, task in enumerate(tasks)]
    if threads <= 1 or len(indexed) <= 1:
        results = [func(t) for t in indexed]
    else:
        with mp.Pool(processes=min(threads, len(indexed))) as pool:
            results = list(pool.imap_unordered(func, indexed))
    return sorted(results, key=lambda r: r["index"])


def _run_point(task: Dict) -> Dict:
    params: TwoGeneParams = task["params"]
    window = task["window"]
    row = {"index": task["index"], "tau": params.tau, "tau1": params.tau1, "tau2": params.tau2}
    try:
        traj = integrate(params, task["history"], window[1], task["rtol"], task["atol"])
        stats = measure_cycle(traj, window, task["reference"])
    except NumericalError as exc:
        logger.warning("Sweep point tau=%.6g failed: %s", params.tau, exc)
        row.update(amplitude=math.nan, amplitude_x2=math.nan, period=math.nan, oscillating=False, lag=math.nan)
        return row
    row.update(
        amplitude=stats.amplitude[0],
        amplitude_x2=stats.amplitude[1],
        period=stats.period if stats.period is not None else math.nan,
        oscillating=stats.oscillating,
        lag=math.nan,
    )
    if task.get("lag") and stats.oscillating:
        row["lag"] = component_lag(traj, window, task["reference"], stats.period)
    return row


def _point_tasks(
    params_list: Iterable[TwoGeneParams],
    eq: Equilibrium,
    window: Tuple[float, float],
    rtol: float,
    atol: float,
    lag: bool = False,
) -> List[Dict]:
    history = onset_history(eq)
    reference = (eq.x1_star, eq.x2_star)
    return [
        {"params": p, "history": history, "reference": reference, "window": window, "rtol": rtol, "atol": atol, "lag": lag}
        for p in params_list
    ]


def fit_prefactor(table: pd.DataFrame, tau_c: float, n_points: int = 3) -> Optional[float]:
    """Mean of A / sqrt(tau - tau_c) over the n smallest oscillating grid points beyond onset."""
    rows = table[(table["tau"] > tau_c) & table["oscillating"]].sort_values("tau").head(n_points)
    if rows.empty:
        return None
    return float(np.mean(rows["amplitude"] / np.sqrt(rows["tau"] - tau_c)))


@dataclass
class SweepResult:
    table: pd.DataFrame
    prefactor: Optional[float]
    tau_c: float
    omega_c: float


def sweep_bifurcation(
    params: TwoGeneParams,
    tau_grid: Sequence[float],
    *,
    window: Tuple[float, float] = AMPLITUDE_WINDOW,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    threads: int = 1,
) -> SweepResult:
    """One integration per total delay (split evenly), late-window amplitude and period."""
    grid = np.asarray(tau_grid, dtype=float)
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("tau grid must be strictly ascending")
    eq = solve_equilibrium(params)
    hopf = _hopf_or_fail(params, eq)
    tasks = _point_tasks((params.with_total_delay(t) for t in grid), eq, window, rtol, atol)
    logger.info("Sweeping %d delays on %d worker(s)", len(tasks), threads)
    rows = map_ordered(_run_point, tasks, threads)
    table = pd.DataFrame(rows, columns=["tau", "amplitude", "amplitude_x2", "period", "oscillating"])
    return SweepResult(table=table, prefactor=fit_prefactor(table, hopf.tau_c), tau_c=hopf.tau_c, omega_c=hopf.omega_c)


def verify_sum_symmetry(
    params: TwoGeneParams,
    tau_total: float,
    splits: Sequence[Tuple[float, float]],
    *,
    window: Tuple[float, float] = AMPLITUDE_WINDOW,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    threads: int = 1,
) -> pd.DataFrame:
    """Cycle statistics for several (tau1, tau2) splits of the same total delay."""
    for tau1, tau2 in splits:
        if tau1 < 0.0 or tau2 < 0.0 or not math.isclose(tau1 + tau2, tau_total, rel_tol=1e-12, abs_tol=1e-15):
            raise DomainError(f"split ({tau1}, {tau2}) does not sum to {tau_total}")
    eq = solve_equilibrium(params)
    tasks = _point_tasks((params.with_delays(a, b) for a, b in splits), eq, window, rtol, atol, lag=True)
    rows = map_ordered(_run_point, tasks, threads)
    return pd.DataFrame(rows, columns=["tau1", "tau2", "amplitude", "amplitude_x2", "period", "oscillating", "lag"])


@dataclass
class OnsetSlope:
    table: pd.DataFrame
    plateau: float
    tau_c: float
    T_c: float


def onset_period_slope(
    params: TwoGeneParams,
    tau_grid: Sequence[float],
    *,
    window: Tuple[float, float] = ONSET_WINDOW,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    threads: int = 1,
) -> OnsetSlope:
    """Secant slopes (T - T_c)/(tau - tau_c) just beyond onset, extrapolated back to tau_c."""
    eq = solve_equilibrium(params)
    hopf = _hopf_or_fail(params, eq)
    grid = np.asarray(tau_grid, dtype=float)
    if np.any(grid <= hopf.tau_c) or np.any(grid > hopf.tau_c + 0.2):
        raise DomainError(f"onset grid must lie in (tau_c, tau_c + 0.2] with tau_c={hopf.tau_c:.6g}")
    tasks = _point_tasks((params.with_total_delay(t) for t in grid), eq, window, rtol, atol)
    rows = map_ordered(_run_point, tasks, threads)
    table = pd.DataFrame(rows, columns=["tau", "period", "amplitude"])
    table["slope"] = (table["period"] - hopf.T_c) / (table["tau"] - hopf.tau_c)
    head = table.dropna().sort_values("tau").head(3)
    if len(head) >= 2:
        plateau = float(np.polyfit(head["tau"] - hopf.tau_c, head["slope"], 1)[1])
    elif len(head) == 1:
        plateau = float(head["slope"].iloc[0])
    else:
        plateau = math.nan
    return OnsetSlope(table=table, plateau=plateau, tau_c=hopf.tau_c, T_c=hopf.T_c)


def relaxation_offset(params: TwoGeneParams) -> RelaxationOffsets:
    """Constant C_inf in the large-delay period law T ~ 2 tau + C_inf."""
    M1, M2 = params.M1, params.M2
    th1, th2 = params.theta1, params.theta2
    if not (0.0 < th1 < M1) or not (0.0 < th2 < M2):
        raise DomainError(f"thresholds must satisfy 0 < theta_i < M_i, got ({th1}, {th2})")
    g1, g2 = params.gamma1, params.gamma2
    dA = math.log(M2 / (M2 - th2)) / g2
    dB = math.log(M1 / th1) / g1
    dC = math.log(M2 / th2) / g2
    dD = math.log(M1 / (M1 - th1)) / g1
    C_inf = math.log(M1**2 / (th1 * (M1 - th1))) / g1 + math.log(M2**2 / (th2 * (M2 - th2))) / g2
    return RelaxationOffsets(C_inf=C_inf, delta_A=dA, delta_B=dB, delta_C=dC, delta_D=dD)


def relaxation_check(
    params: TwoGeneParams,
    taus: Sequence[float] = (10.0, 20.0),
    *,
    n_periods: int = 24,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    threads: int = 1,
) -> pd.DataFrame:
    """Measured T - 2 tau at long delays next to the closed-form offset."""
    offsets = relaxation_offset(params)
    eq = solve_equilibrium(params)
    tasks = []
    for tau in taus:
        t_end = n_periods * (2.0 * tau + offsets.C_inf)
        window = (0.5 * t_end, t_end)
        tasks.extend(_point_tasks([params.with_total_delay(tau)], eq, window, rtol, atol))
    rows = map_ordered(_run_point, tasks, threads)
    table = pd.DataFrame(rows, columns=["tau", "period", "amplitude"])
    table["T_minus_2tau"] = table["period"] - 2.0 * table["tau"]
    table["C_inf"] = offsets.C_inf
    return table
