from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .models import RootPath  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date so reruns give identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "hopf-delay-loop"
matplotlib.rcParams["svg.fonttype"] = "none"


def _save(fig, path: Path, data_name: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Description": f"data: {data_name}"})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def plot_regimes(frames: Mapping[float, pd.DataFrame], reference: tuple, path: Path, data_name: str) -> Path:
    """Time series and phase portrait for each total delay in `frames`."""
    n = len(frames)
    fig, axes = plt.subplots(n, 2, figsize=(10, 3.2 * n), squeeze=False)
    for row, (tau, frame) in enumerate(sorted(frames.items())):
        ax_t, ax_p = axes[row]
        ax_t.plot(frame["t"], frame["x1"], label="x1")
        ax_t.plot(frame["t"], frame["x2"], label="x2")
        ax_t.axhline(reference[0], color="0.6", lw=0.8, ls=":")
        ax_t.set_title(f"tau = {tau:g}")
        ax_t.set_xlabel("t")
        ax_t.legend(loc="upper right")
        ax_p.plot(frame["x1"], frame["x2"], lw=0.8)
        ax_p.plot([reference[0]], [reference[1]], "k+", ms=10)
        ax_p.set_xlabel("x1")
        ax_p.set_ylabel("x2")
    fig.tight_layout()
    return _save(fig, path, data_name)


def plot_bifurcation(
    table: pd.DataFrame,
    tau_c: float,
    prefactor: Optional[float],
    path: Path,
    data_name: str,
    *,
    T_coeff: Optional[float] = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(table["tau"], table["amplitude"], "o", label="DDE amplitude (x1)")
    tau = np.linspace(tau_c, float(table["tau"].max()), 200)
    excess = np.clip(tau - tau_c, 0.0, None)
    if prefactor is not None:
        ax.plot(tau, prefactor * np.sqrt(excess), "-", label=f"{prefactor:.3f} sqrt(tau - tau_c)")
    if T_coeff is not None and T_coeff > 0.0:
        ax.plot(tau, 2.0 * np.sqrt(excess / T_coeff), "--", label=f"Lindstedt, T = {T_coeff:.4f}")
    ax.axvline(tau_c, color="0.5", ls=":", label=f"tau_c = {tau_c:.4f}")
    ax.set_xlabel("total delay tau")
    ax.set_ylabel("amplitude")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path, data_name)


def plot_period(
    table: pd.DataFrame,
    tau_c: float,
    T_c: float,
    linear_slope: float,
    C_inf: float,
    path: Path,
    data_name: str,
) -> Path:
    """Measured period with the linear onset tangent and the large-delay asymptote 2 tau + C_inf."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ok = table.dropna(subset=["period"])
    ax.plot(ok["tau"], ok["period"], "o", label="DDE period")
    tau = np.linspace(tau_c, float(table["tau"].max()), 200)
    ax.plot(tau, T_c + linear_slope * (tau - tau_c), "--", label=f"linear tangent, slope {linear_slope:.3f}")
    ax.plot(tau, 2.0 * tau + C_inf, ":", label=f"2 tau + {C_inf:.2f}")
    ax.set_xlabel("total delay tau")
    ax.set_ylabel("period T")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path, data_name)


def plot_eigtraj(root_path: RootPath, omega_c: float, path: Path, data_name: str) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    roots = root_path.roots
    ax.plot(roots.real, roots.imag, "-", color="C0", label="leading root")
    ax.plot(roots.real, -roots.imag, "-", color="C0", alpha=0.5)
    ax.plot([0.0, 0.0], [omega_c, -omega_c], "rx", ms=10, label=f"+/- i omega_c, omega_c = {omega_c:.4f}")
    ax.axvline(0.0, color="0.5", lw=0.8)
    ax.set_xlabel("Re mu")
    ax.set_ylabel("Im mu")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path, data_name)
