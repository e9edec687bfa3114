from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TwoGeneParams:
    """
    Constants of the delayed logistic two-gene loop

        x1' = -gamma1 x1 + kappa1 f-(x2(t - tau2); theta2, lam)
        x2' = -gamma2 x2 + kappa2 f+(x1(t - tau1); theta1, lam)

    `lam` is the shared logistic steepness. Thresholds are variable-indexed:
    theta_j is read on x_j.
    """

    kappa1: float
    gamma1: float
    kappa2: float
    gamma2: float
    theta1: float
    theta2: float
    lam: float
    tau1: float = 0.0
    tau2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kappa1", "gamma1", "kappa2", "gamma2", "lam"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        for name in ("tau1", "tau2"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be non-negative, got {value!r}")

    @property
    def M1(self) -> float:
        return self.kappa1 / self.gamma1

    @property
    def M2(self) -> float:
        return self.kappa2 / self.gamma2

    @property
    def tau(self) -> float:
        return self.tau1 + self.tau2

    def with_lambda(self, lam: float) -> "TwoGeneParams":
        return replace(self, lam=float(lam))

    def with_delays(self, tau1: float, tau2: float) -> "TwoGeneParams":
        return replace(self, tau1=float(tau1), tau2=float(tau2))

    def with_total_delay(self, tau: float) -> "TwoGeneParams":
        # symmetric split is the reporting default
        return self.with_delays(0.5 * tau, 0.5 * tau)

    def has_symmetric_thresholds(self, rel_tol: float = 1e-9) -> bool:
        return math.isclose(self.theta1, 0.5 * self.M1, rel_tol=rel_tol) and math.isclose(
            self.theta2, 0.5 * self.M2, rel_tol=rel_tol
        )

    @classmethod
    def canonical(cls) -> "TwoGeneParams":
        return cls(kappa1=3.0, gamma1=0.25, kappa2=4.0, gamma2=0.5, theta1=4.0, theta2=3.0, lam=3.0)

    @classmethod
    def symmetric(cls) -> "TwoGeneParams":
        """Canonical rates with thresholds at half the carrying capacities."""
        return cls(kappa1=3.0, gamma1=0.25, kappa2=4.0, gamma2=0.5, theta1=6.0, theta2=4.0, lam=3.0)


@dataclass(frozen=True)
class Equilibrium:
    x1_star: float
    x2_star: float
    fplus_star: float
    fminus_star: float
    A: float
    B: float

    @property
    def AB(self) -> float:
        return self.A * self.B


@dataclass(frozen=True)
class TaylorCoefficients:
    b1: float
    b2: float
    d1: float
    d2: float


@dataclass(frozen=True)
class SteepnessAsymptotics:
    c0: float
    c_inf: float
    xi1: float
    xi2: float


@dataclass(frozen=True)
class HillParams:
    n1: float
    n2: float


@dataclass(frozen=True)
class HillCounterpart:
    hill: HillParams
    equilibrium: Equilibrium


@dataclass(frozen=True)
class HopfPoint:
    omega_c: float
    tau_c: float
    branch_k: int = 0

    @property
    def T_c(self) -> float:
        return 2.0 * math.pi / self.omega_c

    @property
    def tau_k(self) -> float:
        """Critical delay of this branch, tau_c + 2 pi k / omega_c."""
        return self.tau_c + 2.0 * math.pi * self.branch_k / self.omega_c


@dataclass(frozen=True)
class Transversality:
    re: float
    im: float
    lower_bound: float
    branch_k: int = 0


@dataclass(frozen=True)
class HopfEigenvector:
    q1: complex
    q1_amp_sq: float


@dataclass(frozen=True)
class StabilityClass:
    kind: str  # absolutely-stable | stable-below-onset | unstable
    crossings: int = 0

    @property
    def stable(self) -> bool:
        return self.kind != "unstable"


@dataclass(frozen=True)
class NormalFormC1:
    re_c1: float
    im_c1: float
    ratio: float


@dataclass(frozen=True)
class LyapunovResult:
    T_coeff: float
    Omega2: float
    q2: complex
    W0: np.ndarray
    W2: np.ndarray
    P: complex
    Q0: complex
    G: complex
    S1: float
    S2: float
    omega_c: float
    tau_c: float

    @property
    def supercritical(self) -> bool:
        return self.T_coeff > 0.0

    @property
    def amplitude_prefactor(self) -> float:
        """x1 amplitude per sqrt(tau - tau_c)."""
        return 2.0 / math.sqrt(self.T_coeff)


@dataclass(frozen=True)
class CyclicLoopParams:
    """
    Link-indexed cyclic loop: link i feeds gene i from gene i-1 (mod N)
    with threshold theta[i], delay tau[i] and sign epsilon[i].
    """

    kappa: Tuple[float, ...]
    gamma: Tuple[float, ...]
    theta: Tuple[float, ...]
    tau: Tuple[float, ...]
    epsilon: Tuple[int, ...]
    lam: float

    def __post_init__(self) -> None:
        n = len(self.kappa)
        if n < 2:
            raise DomainError(f"cyclic loop needs N >= 2 genes, got {n}")
        for name in ("gamma", "theta", "tau", "epsilon"):
            if len(getattr(self, name)) != n:
                raise DomainError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if any(not (k > 0.0) for k in self.kappa) or any(not (g > 0.0) for g in self.gamma):
            raise DomainError("kappa and gamma entries must be positive")
        if any(not (t >= 0.0) for t in self.tau):
            raise DomainError("link delays must be non-negative")
        if any(e not in (1, -1) for e in self.epsilon):
            raise DomainError(f"epsilon entries must be +1 or -1, got {self.epsilon}")
        if int(np.prod(self.epsilon)) != -1:
            raise DomainError("only negative-feedback loops (odd number of repressions) are supported")
        if not (self.lam > 0.0):
            raise DomainError(f"lam must be positive, got {self.lam!r}")

    @property
    def N(self) -> int:
        return len(self.kappa)

    @property
    def M(self) -> np.ndarray:
        return np.asarray(self.kappa, dtype=float) / np.asarray(self.gamma, dtype=float)

    @property
    def total_delay(self) -> float:
        return float(sum(self.tau))

    def with_delays(self, tau) -> "CyclicLoopParams":
        return replace(self, tau=tuple(float(t) for t in tau))

    @classmethod
    def symmetric(cls, N: int, *, kappa: float, gamma: float, theta: float, lam: float, tau: float = 0.0) -> "CyclicLoopParams":
        # one repressor closes the loop
        eps = (-1,) + (1,) * (N - 1)
        return cls(
            kappa=(kappa,) * N,
            gamma=(gamma,) * N,
            theta=(theta,) * N,
            tau=(tau / N,) * N,
            epsilon=eps,
            lam=lam,
        )

    @classmethod
    def from_two_gene(cls, params: TwoGeneParams) -> "CyclicLoopParams":
        return cls(
            kappa=(params.kappa1, params.kappa2),
            gamma=(params.gamma1, params.gamma2),
            theta=(params.theta2, params.theta1),
            tau=(params.tau2, params.tau1),
            epsilon=(-1, 1),
            lam=params.lam,
        )


@dataclass(frozen=True)
class CyclicHopf:
    omega_c: float
    tau_c: float
    k_star: int
    S1: float
    S2: float
    trans_re: float
    trans_im: float
    Lambda: float
    window: Optional[Tuple[float, float]] = None

    @property
    def T_c(self) -> float:
        return 2.0 * math.pi / self.omega_c

    def tau_branch(self, k: int) -> float:
        return self.tau_c + 2.0 * math.pi * k / self.omega_c


@dataclass(frozen=True)
class NoDelayStability:
    stable: bool
    abscissa: float
    roots: np.ndarray


@dataclass(frozen=True)
class CycleStats:
    amplitude: Tuple[float, ...]
    period: Optional[float]
    oscillating: bool
    crossings: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass(frozen=True)
class RelaxationOffsets:
    C_inf: float
    delta_A: float
    delta_B: float
    delta_C: float
    delta_D: float


@dataclass(frozen=True)
class RootPath:
    taus: np.ndarray
    roots: np.ndarray
    tau_cross: Optional[float]
    omega_cross: Optional[float]
    newton_iterations: int
    truncated: bool = False

    def root_at(self, tau: float) -> complex:
        """Root at the grid point nearest to `tau`."""
        idx = int(np.argmin(np.abs(self.taus - tau)))
        return complex(self.roots[idx])
