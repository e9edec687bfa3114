from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize

from .errors import DomainError, MeasurementError, StepSizeError
from .logistic import f_minus, f_plus
from .models import CycleStats, CyclicLoopParams, TwoGeneParams

logger = logging.getLogger(__name__)

DelaySystem = Union[TwoGeneParams, CyclicLoopParams]

# Dormand-Prince 5(4) tableau
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_B5 = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0])
_B4 = np.array(
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0]
)
_E = _B5 - _B4

# Continuous extension of the 5th-order solution (4th order in theta):
# y(t0 + theta h) = y0 + h * (K.T @ _P) @ [theta, theta^2, theta^3, theta^4]
_P = np.array(
    [
        [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
        [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
        [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
        [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
        [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
    ]
)

SAFETY = 0.9
ERROR_EXPONENT = 1.0 / 5.0
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0

OSCILLATION_THRESHOLD = 1e-3


def as_delay_system(system: DelaySystem) -> CyclicLoopParams:
    if isinstance(system, TwoGeneParams):
        return CyclicLoopParams.from_two_gene(system)
    return system


def _dense(t0, h, y0, q, s):
    # q holds h-free polynomial coefficients per component, shape (..., N, 4)
    x = (s - t0) / h
    poly = q[..., 3]
    for p in (2, 1, 0):
        poly = q[..., p] + x * poly
    return y0 + h * x * poly


@dataclass
class Trajectory:
    """Accepted-step mesh with the per-step continuous extension of the solution."""

    t: np.ndarray
    y: np.ndarray
    q: np.ndarray
    history: np.ndarray
    steps: int
    rejections: int

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def sample(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(times > self.t[-1] * (1.0 + 1e-12)):
            raise DomainError(f"sample time beyond trajectory end {self.t[-1]}")
        out = np.empty((len(times), self.y.shape[1]))
        past = times <= self.t[0]
        out[past] = self.history
        inside = ~past
        if np.any(inside):
            s = times[inside]
            idx = np.clip(np.searchsorted(self.t, s, side="right") - 1, 0, len(self.t) - 2)
            t0 = self.t[idx][:, None]
            out[inside] = _dense(t0, self.t[idx + 1][:, None] - t0, self.y[idx], self.q[idx], s[:, None])
        return out

    def component(self, j: int, s: float) -> float:
        return float(self.sample([s])[0, j])

    def to_frame(self, resolution: float = 0.01, t_lo: float = 0.0, t_hi: Optional[float] = None) -> pd.DataFrame:
        t_hi = self.t_end if t_hi is None else t_hi
        times = np.arange(t_lo, t_hi + 0.5 * resolution, resolution)
        times = times[times <= self.t_end]
        values = self.sample(times)
        frame = pd.DataFrame({"t": times})
        for j in range(values.shape[1]):
            frame[f"x{j + 1}"] = values[:, j]
        return frame


def integrate(
    system: DelaySystem,
    history: Sequence[float],
    t_end: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    *,
    h0: Optional[float] = None,
) -> Trajectory:
    """
    Method-of-steps integration from a constant history on [-max delay, 0].

    Adaptive Dormand-Prince 5(4) stepping. Delayed states are read from the
    continuous extension of accepted steps (or the constant history for
    arguments <= 0); steps never exceed the smallest positive delay, so a
    stage never needs the step it belongs to.
    """
    if not (rtol > 0.0 and atol > 0.0):
        raise DomainError(f"tolerances must be positive, got rtol={rtol}, atol={atol}")
    loop = as_delay_system(system)
    N = loop.N
    phi = np.asarray(history, dtype=float)
    if phi.shape != (N,):
        raise DomainError(f"history must have {N} components, got shape {phi.shape}")
    if np.any(phi < 0.0):
        raise DomainError("history must be non-negative")
    if not (t_end > 0.0):
        raise DomainError(f"t_end must be positive, got {t_end}")

    gamma = np.asarray(loop.gamma, dtype=float)
    kappa = np.asarray(loop.kappa, dtype=float)
    delays = tuple(float(d) for d in loop.tau)
    sources = tuple((i - 1) % N for i in range(N))
    links: List[Callable] = [f_plus if e > 0 else f_minus for e in loop.epsilon]
    positive = [d for d in delays if d > 0.0]
    cap = min(positive) if positive else math.inf

    ts: List[float] = [0.0]
    ys: List[np.ndarray] = [phi.copy()]
    qs: List[np.ndarray] = []

    def lookup(s: float, j: int) -> float:
        if s <= 0.0:
            return phi[j]
        idx = bisect_right(ts, s) - 1
        if idx >= len(ts) - 1:
            idx = len(ts) - 2
        t0 = ts[idx]
        return float(_dense(t0, ts[idx + 1] - t0, ys[idx][j], qs[idx][j], s))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        out = -gamma * y
        for i in range(N):
            d = delays[i]
            j = sources[i]
            v = y[j] if d == 0.0 else lookup(t - d, j)
            out[i] += kappa[i] * links[i](v, loop.theta[i], loop.lam)
        return out

    t = 0.0
    y = phi.copy()
    k1 = rhs(0.0, phi)
    h = min(cap, h0 if h0 is not None else 1e-2)
    h_floor = 1e-14 * t_end
    steps = rejections = 0
    K = np.empty((7, N))

    while t < t_end:
        h = min(h, t_end - t, cap)
        if h < h_floor and t_end - t > h_floor:
            raise StepSizeError(f"integrate failed: step size {h:.3e} underflow at t={t:.6g}", t=t, h=h)
        K[0] = k1
        for s in range(1, 7):
            ystage = y + h * np.dot(_A[s], K[:s])
            K[s] = rhs(t + _C[s] * h, ystage)
        y_new = y + h * np.dot(_B5, K)
        err_vec = h * np.dot(_E, K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t = t + h
            y = y_new
            k1 = K[6].copy()
            qs.append(K.T @ _P)
            ts.append(t)
            ys.append(y)
            steps += 1
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, SAFETY * err ** -ERROR_EXPONENT)
        else:
            rejections += 1
            factor = max(_MIN_FACTOR, SAFETY * err ** -ERROR_EXPONENT)
        h = h * factor

    logger.debug("integrate: %d steps, %d rejections to t=%g", steps, rejections, t_end)
    return Trajectory(
        t=np.asarray(ts),
        y=np.vstack(ys),
        q=np.stack(qs),
        history=phi,
        steps=steps,
        rejections=rejections,
    )


def _window_samples(traj: Trajectory, window: Tuple[float, float], resolution: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    t_lo, t_hi = window
    if not (0.0 <= t_lo < t_hi <= traj.t_end * (1.0 + 1e-12)):
        raise DomainError(f"window {window} outside trajectory span [0, {traj.t_end}]")
    step = resolution if resolution is not None else min(5e-3, (t_hi - t_lo) / 20000.0)
    times = np.linspace(t_lo, t_hi, int(math.ceil((t_hi - t_lo) / step)) + 1)
    return times, traj.sample(times)


def upward_crossings(traj: Trajectory, window: Tuple[float, float], level: float, j: int = 0, resolution: Optional[float] = None) -> np.ndarray:
    """Times where component j crosses `level` upwards, refined on the dense output."""
    times, values = _window_samples(traj, window, resolution)
    d = values[:, j] - level
    idx = np.nonzero((d[:-1] < 0.0) & (d[1:] >= 0.0))[0]
    out = np.empty(len(idx))
    for n, k in enumerate(idx):
        if d[k + 1] == 0.0:
            out[n] = times[k + 1]
            continue
        out[n] = optimize.brentq(lambda s: traj.component(j, s) - level, times[k], times[k + 1], xtol=1e-13)
    return out


def measure_cycle(
    traj: Trajectory,
    window: Tuple[float, float],
    reference: Optional[Sequence[float]] = None,
    *,
    resolution: Optional[float] = None,
    threshold: float = OSCILLATION_THRESHOLD,
) -> CycleStats:
    """
    Late-time amplitude (max - min)/2 of every component over `window` and the
    mean interval between upward crossings of x1 through its reference level.
    """
    times, values = _window_samples(traj, window, resolution)
    amplitude = tuple(float(a) for a in 0.5 * (values.max(axis=0) - values.min(axis=0)))
    oscillating = amplitude[0] >= threshold
    if not oscillating:
        return CycleStats(amplitude=amplitude, period=None, oscillating=False)
    level = float(reference[0]) if reference is not None else 0.5 * float(values[:, 0].max() + values[:, 0].min())
    crossings = upward_crossings(traj, window, level, 0, resolution)
    if len(crossings) < 2:
        raise MeasurementError(
            f"measure_cycle failed: {len(crossings)} upward crossings in {window} with amplitude {amplitude[0]:.4g}"
        )
    period = float(np.mean(np.diff(crossings)))
    return CycleStats(amplitude=amplitude, period=period, oscillating=True, crossings=crossings)


def component_lag(
    traj: Trajectory,
    window: Tuple[float, float],
    reference: Sequence[float],
    period: float,
) -> float:
    """Mean delay from each upward x1 crossing to the next upward x2 crossing, modulo the period."""
    c1 = upward_crossings(traj, window, float(reference[0]), 0)
    c2 = upward_crossings(traj, window, float(reference[1]), 1)
    if len(c1) == 0 or len(c2) == 0:
        raise MeasurementError("component_lag failed: no crossings in window")
    lags = []
    for s in c1:
        later = c2[c2 >= s]
        if len(later):
            lags.append(later[0] - s)
    if not lags:
        raise MeasurementError("component_lag failed: no x2 crossing follows an x1 crossing")
    return float(np.mean(lags)) % period


def dissipativity_envelope(system: DelaySystem, history: Sequence[float], t) -> np.ndarray:
    """Upper envelope M_i + (Phi_i - M_i) exp(-gamma_i t) for a constant history Phi."""
    loop = as_delay_system(system)
    M = loop.M
    gamma = np.asarray(loop.gamma, dtype=float)
    phi = np.asarray(history, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    return M + (phi - M) * np.exp(-gamma * t)
