from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import figures
from .config import RunConfig
from .cyclic import (
    link_gains,
    link_residuals,
    ngene_char_eval,
    ngene_equilibrium,
    ngene_hopf,
    ngene_transversality,
    ngene_transversality_identity_check,
    ngene_transversality_lower_bound,
    no_delay_stability,
    omega_bracket,
    routh_hurwitz_n3,
)
from .dde import integrate
from .errors import DomainError
from .hopf import (
    classify_stability,
    critical_delays,
    extract_c1,
    hopf_discrepancy,
    hopf_eigenvector,
    linear_period_slope,
    solve_gain_for_delay,
    transversality,
)
from .lindstedt import (
    general_lyapunov,
    montecarlo_criticality,
    simulated_criticality,
    solvability_residual,
    split_params,
    symmetric_lyapunov,
)
from .logistic import (
    critical_steepness,
    equilibrium_residuals,
    hill_counterpart,
    solve_equilibrium,
    steepness_asymptotics,
    taylor_coefficients,
)
from .models import CyclicLoopParams, NormalFormC1, RootPath, TwoGeneParams
from .spectrum import Characteristic, continue_root, fd_transversality, tangent_angle_deg
from .storage import write_csv, write_json
from .sweeps import (
    fit_prefactor,
    onset_history,
    onset_period_slope,
    relaxation_check,
    relaxation_offset,
    sweep_bifurcation,
    verify_sum_symmetry,
)

logger = logging.getLogger(__name__)

LYAPUNOV_SPLITS = (0.2, 0.35, 0.5, 0.65, 0.8)
REGIME_DELAYS = (0.10, 0.20, 0.60)
REGIME_HORIZON = 60.0
PERIOD_FIGURE_EXTRA = (1.0, 2.0, 4.0, 6.0)
RELAXATION_DELAYS = (10.0, 20.0)
TRACE_STEP = 0.005


def _show(title: str, frame: pd.DataFrame) -> None:
    # human-facing tables use 4 significant digits; CSVs keep full precision
    print(f"\n{title}")
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4g}"))


def _show_mapping(title: str, values: Dict[str, Any]) -> None:
    rows = [(k, v) for k, v in values.items() if not isinstance(v, (dict, list, np.ndarray))]
    _show(title, pd.DataFrame(rows, columns=["quantity", "value"]))


# ---------------------------------------------------------------- two-gene analysis


def analyze_two_gene(params: TwoGeneParams, k_max: int = 2) -> Dict[str, Any]:
    """Closed-form report for one two-gene parameter set."""
    eq = solve_equilibrium(params)
    r1, r2 = equilibrium_residuals(params, eq)
    report: Dict[str, Any] = {
        "x1_star": eq.x1_star,
        "x2_star": eq.x2_star,
        "residual_max": max(r1, r2),
        "A": eq.A,
        "B": eq.B,
        "AB": eq.AB,
        "gamma1_gamma2": params.gamma1 * params.gamma2,
        "stability": classify_stability(params, eq).kind,
        "hopf": False,
    }
    try:
        report["lambda_c"] = critical_steepness(params)
        asym = steepness_asymptotics(params)
        report.update(c0=asym.c0, c_inf=asym.c_inf)
        report["C_inf"] = relaxation_offset(params).C_inf
    except DomainError as exc:
        logger.warning("Steepness and relaxation constants skipped: %s", exc)

    branches = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=k_max)
    if not branches:
        logger.info("No Hopf point: AB=%.4g <= gamma1*gamma2=%.4g", eq.AB, params.gamma1 * params.gamma2)
        return report

    hopf = branches[0]
    trans = transversality(eq.A, eq.B, params.gamma1, params.gamma2)
    q = hopf_eigenvector(eq.B, params.gamma1, hopf.omega_c, 0.5 * hopf.tau_c)
    report.update(
        hopf=True,
        omega_c=hopf.omega_c,
        tau_c=hopf.tau_c,
        T_c=hopf.T_c,
        trans_re=trans.re,
        trans_im=trans.im,
        trans_lower_bound=trans.lower_bound,
        linear_period_slope=linear_period_slope(hopf, trans),
        q1_amp_sq=q.q1_amp_sq,
        q1_abs=math.sqrt(q.q1_amp_sq),
    )
    report["branches"] = [
        {
            "k": b.branch_k,
            "tau": b.tau_k,
            "trans_re": transversality(eq.A, eq.B, params.gamma1, params.gamma2, b.branch_k).re,
        }
        for b in branches
    ]
    for b in report["branches"][1:]:
        report[f"tau_c_{b['k']}"] = b["tau"]
        report[f"trans_re_{b['k']}"] = b["trans_re"]

    lyap = general_lyapunov(split_params(params, hopf), eq, hopf, taylor_coefficients(params, eq))
    report.update(T_coeff=lyap.T_coeff, Omega2=lyap.Omega2, supercritical=lyap.supercritical)
    if lyap.supercritical:
        report["amplitude_prefactor"] = lyap.amplitude_prefactor
    if params.has_symmetric_thresholds():
        sym = symmetric_lyapunov(split_params(params, hopf), eq, hopf)
        report.update(T_symmetric=sym.T_coeff, Omega2_symmetric=sym.Omega2, prefactor_symmetric=sym.amplitude_prefactor)
    return report


def loop_gain_table(params: TwoGeneParams, lambdas: Sequence[float]) -> pd.DataFrame:
    rows = []
    for lam in lambdas:
        p = params.with_lambda(lam)
        eq = solve_equilibrium(p)
        branches = critical_delays(eq.A, eq.B, p.gamma1, p.gamma2, k_max=0)
        row = {"lambda": float(lam), "AB": eq.AB, "hopf": bool(branches)}
        if branches:
            row.update(omega_c=branches[0].omega_c, tau_c=branches[0].tau_c, T_c=branches[0].T_c)
        else:
            row.update(omega_c=math.nan, tau_c=math.nan, T_c=math.nan)
        rows.append(row)
    return pd.DataFrame(rows, columns=["lambda", "AB", "omega_c", "tau_c", "T_c", "hopf"])


def normal_form_from_measurements(params: TwoGeneParams, prefactor: float, onset_slope: float) -> NormalFormC1:
    """c1 from a fitted amplitude prefactor and the measured onset period slope."""
    eq = solve_equilibrium(params)
    branches = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)
    if not branches:
        raise DomainError("no Hopf point for these parameters")
    hopf = branches[0]
    trans = transversality(eq.A, eq.B, params.gamma1, params.gamma2)
    q = hopf_eigenvector(eq.B, params.gamma1, hopf.omega_c, 0.5 * hopf.tau_c)
    return extract_c1(hopf, trans, q, prefactor**2, onset_slope)


def lyapunov_splits(params: TwoGeneParams, fractions: Sequence[float] = LYAPUNOV_SPLITS) -> pd.DataFrame:
    """General criticality coefficient at several placements of the critical delay."""
    eq = solve_equilibrium(params)
    branches = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)
    if not branches:
        raise DomainError(f"no Hopf point (AB={eq.AB:.4g}); the criticality coefficient is undefined")
    hopf = branches[0]
    taylor = taylor_coefficients(params, eq)
    rows = []
    for frac in fractions:
        split = split_params(params, hopf, frac)
        result = general_lyapunov(split, eq, hopf, taylor)
        rows.append(
            {
                "fraction": float(frac),
                "tau1": split.tau1,
                "tau2": split.tau2,
                "T_coeff": result.T_coeff,
                "Omega2": result.Omega2,
                "residual": solvability_residual(result),
            }
        )
    return pd.DataFrame(rows)


def calibrate_p53(half_life: float, delay: float, observed_period: float) -> Dict[str, float]:
    """Gain that puts the Hopf onset at `delay` for equal half-lives, and the predicted period."""
    if not (half_life > 0.0 and delay > 0.0 and observed_period > 0.0):
        raise DomainError("half_life, delay and observed_period must be positive")
    gamma = math.log(2.0) / half_life
    AB, hopf = solve_gain_for_delay(gamma, gamma, delay)
    return {
        "gamma": gamma,
        "AB": AB,
        "omega_c": hopf.omega_c,
        "tau_c": hopf.tau_c,
        "T_c": hopf.T_c,
        "observed_period": observed_period,
        "deviation_pct": 100.0 * abs(hopf.T_c - observed_period) / observed_period,
    }


def hill_compare(params: TwoGeneParams) -> Dict[str, float]:
    eq = solve_equilibrium(params)
    counterpart = hill_counterpart(params)
    heq = counterpart.equilibrium
    out: Dict[str, float] = {
        "n1": counterpart.hill.n1,
        "n2": counterpart.hill.n2,
        "AB_logistic": eq.AB,
        "AB_hill": heq.AB,
        "x1_hill": heq.x1_star,
        "x2_hill": heq.x2_star,
    }
    out.update(hopf_discrepancy((eq.A, eq.B), (heq.A, heq.B), params.gamma1, params.gamma2))
    return out


def ngene_report(loop: CyclicLoopParams) -> Dict[str, Any]:
    x_star = ngene_equilibrium(loop)
    gains, Lambda = link_gains(loop, x_star)
    nd = no_delay_stability(loop, Lambda)
    report: Dict[str, Any] = {
        "N": loop.N,
        "x_star": x_star,
        "residual_max": float(np.max(link_residuals(loop, x_star))),
        "gains": gains,
        "Lambda": Lambda,
        "gamma_product": float(np.prod(loop.gamma)),
        "no_delay_stable": nd.stable,
        "no_delay_abscissa": nd.abscissa,
        "hopf": False,
    }
    if loop.N == 3:
        report["routh_hurwitz_stable"] = routh_hurwitz_n3(loop.gamma, Lambda)
    hopf = ngene_hopf(loop)
    if hopf is None:
        logger.info("No Hopf point: Lambda=%.4g <= prod(gamma)=%.4g", Lambda, report["gamma_product"])
        return report
    lo, hi = omega_bracket(loop.gamma, Lambda)
    report.update(
        hopf=True,
        omega_c=hopf.omega_c,
        omega_sq_bracket=[lo, hi],
        tau_c=hopf.tau_c,
        T_c=hopf.T_c,
        k_star=hopf.k_star,
        S1=hopf.S1,
        S2=hopf.S2,
        trans_re=hopf.trans_re,
        trans_im=hopf.trans_im,
        trans_lower_bound=ngene_transversality_lower_bound(loop, hopf),
        trans_re_1=ngene_transversality(hopf, 1)[0],
        char_residual=abs(ngene_char_eval(1j * hopf.omega_c, loop, hopf.tau_c, Lambda)),
        identity_residual=ngene_transversality_identity_check(loop, hopf),
    )
    if hopf.window is not None:
        report["window_lo"], report["window_hi"] = hopf.window
    return report


def trace_two_gene(params: TwoGeneParams, tau_max: float, step: float = TRACE_STEP) -> Tuple[RootPath, Dict[str, Any]]:
    """Leading-root path of the two-gene characteristic equation with crossing diagnostics."""
    eq = solve_equilibrium(params)
    char = Characteristic.from_gains(eq.A, eq.B, params.gamma1, params.gamma2)
    grid = np.round(np.arange(step, tau_max + 0.5 * step, step), 12)
    path = continue_root(char, grid)
    info: Dict[str, Any] = {
        "tau_cross": path.tau_cross,
        "omega_cross": path.omega_cross,
        "newton_iterations": path.newton_iterations,
        "truncated": path.truncated,
    }
    if path.tau_cross is not None:
        try:
            slope = fd_transversality(char, path, path.tau_cross)
        except DomainError as exc:
            logger.warning("Finite-difference transversality skipped: %s", exc)
        else:
            info.update(fd_trans_re=slope.real, fd_trans_im=slope.imag, tangent_angle_deg=tangent_angle_deg(slope))
    return path, info


def _root_frame(path: RootPath) -> pd.DataFrame:
    return pd.DataFrame({"tau": path.taus, "re_mu": path.roots.real, "im_mu": path.roots.imag})


# ---------------------------------------------------------------- commands
# Each cmd_* writes its artefacts under out_dir and returns the written paths.


def cmd_analyze(cfg: RunConfig, out_dir: Path) -> List[Path]:
    report = analyze_two_gene(cfg.params)
    _show_mapping("Closed-form analysis", report)
    summary = pd.DataFrame(
        [(k, float(v)) for k, v in report.items() if isinstance(v, (int, float)) and not isinstance(v, bool)],
        columns=["quantity", "value"],
    )
    return [
        write_json(out_dir, name="analyze.json", payload=report),
        write_csv(out_dir, name="analyze.csv", frame=summary),
    ]


def cmd_tables(cfg: RunConfig, which: int, out_dir: Path) -> List[Path]:
    params = cfg.params
    if which == 1:
        table = loop_gain_table(params, cfg.lambda_grid)
        _show("Loop gain against steepness", table)
        constants = {"lambda_c": critical_steepness(params)}
        asym = steepness_asymptotics(params)
        constants.update(c0=asym.c0, c_inf=asym.c_inf, xi1=asym.xi1, xi2=asym.xi2)
        _show_mapping("Steepness constants", constants)
        return [
            write_csv(out_dir, name="table1.csv", frame=table),
            write_json(out_dir, name="table1_constants.json", payload=constants),
        ]
    if which == 2:
        result = sweep_bifurcation(
            params, cfg.tau_grid, window=cfg.window, rtol=cfg.rtol, atol=cfg.atol, threads=cfg.threads
        )
        _show("Amplitude and period against total delay", result.table)
        summary = {"tau_c": result.tau_c, "omega_c": result.omega_c, "prefactor": result.prefactor}
        if result.prefactor is not None:
            summary["T_simulated"] = simulated_criticality(result.prefactor)
        _show_mapping("Onset fit", summary)
        return [
            write_csv(out_dir, name="table2.csv", frame=result.table),
            write_json(out_dir, name="table2_fit.json", payload=summary),
        ]
    if which == 3:
        tau_total = sum(cfg.splits[0])
        table = verify_sum_symmetry(
            params, tau_total, cfg.splits, window=cfg.window, rtol=cfg.rtol, atol=cfg.atol, threads=cfg.threads
        )
        _show(f"Delay splits of tau = {tau_total:g}", table)
        return [write_csv(out_dir, name="table3.csv", frame=table)]
    if which == 4:
        onset = onset_period_slope(
            params, cfg.onset_grid, window=cfg.onset_window, rtol=cfg.onset_rtol, atol=cfg.atol, threads=cfg.threads
        )
        _show("Period just beyond onset", onset.table)
        eq = solve_equilibrium(params)
        trans = transversality(eq.A, eq.B, params.gamma1, params.gamma2)
        hopf = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)[0]
        summary: Dict[str, Any] = {
            "tau_c": onset.tau_c,
            "T_c": onset.T_c,
            "slope_plateau": onset.plateau,
            "linear_slope": linear_period_slope(hopf, trans),
        }
        sweep_csv = Path(out_dir) / "table2.csv"
        if sweep_csv.exists() and math.isfinite(onset.plateau):
            prefactor = fit_prefactor(pd.read_csv(sweep_csv), onset.tau_c)
            if prefactor is not None:
                c1 = normal_form_from_measurements(params, prefactor, onset.plateau)
                summary.update(prefactor=prefactor, re_c1=c1.re_c1, im_c1=c1.im_c1, c1_ratio=c1.ratio)
        else:
            logger.info("Run 'tables 2' into the same output directory to add the c1 extraction")
        _show_mapping("Onset slope", summary)
        return [
            write_csv(out_dir, name="table4.csv", frame=onset.table),
            write_json(out_dir, name="table4_fit.json", payload=summary),
        ]
    raise DomainError(f"table selector must be 1, 2, 3 or 4, got {which!r}")


def cmd_sweep(cfg: RunConfig, out_dir: Path) -> List[Path]:
    result = sweep_bifurcation(
        cfg.params, cfg.tau_grid, window=cfg.window, rtol=cfg.rtol, atol=cfg.atol, threads=cfg.threads
    )
    _show("Bifurcation sweep", result.table)
    return [
        write_csv(out_dir, name="sweep.csv", frame=result.table),
        write_json(
            out_dir,
            name="sweep_fit.json",
            payload={"tau_c": result.tau_c, "omega_c": result.omega_c, "prefactor": result.prefactor},
        ),
    ]


def cmd_integrate(cfg: RunConfig, out_dir: Path, *, tau: Optional[float], t_end: float, resolution: float) -> List[Path]:
    params = cfg.params if tau is None else cfg.params.with_total_delay(tau)
    eq = solve_equilibrium(params)
    traj = integrate(params, onset_history(eq), t_end, cfg.rtol, cfg.atol)
    logger.info("Integrated to t=%g in %d steps (%d rejected)", t_end, traj.steps, traj.rejections)
    return [write_csv(out_dir, name="trajectory.csv", frame=traj.to_frame(resolution))]


def cmd_trace(cfg: RunConfig, out_dir: Path, *, tau_max: float, step: float = TRACE_STEP) -> List[Path]:
    path, info = trace_two_gene(cfg.params, tau_max, step)
    _show_mapping("Leading root path", info)
    return [
        write_csv(out_dir, name="root_path.csv", frame=_root_frame(path)),
        write_json(out_dir, name="root_path.json", payload=info),
    ]


def cmd_ngene(cfg: RunConfig, out_dir: Path) -> List[Path]:
    report = ngene_report(cfg.ngene)
    _show_mapping(f"Cyclic loop, N = {cfg.ngene.N}", report)
    return [write_json(out_dir, name="ngene.json", payload=report)]


def cmd_lyapunov(cfg: RunConfig, out_dir: Path) -> List[Path]:
    table = lyapunov_splits(cfg.params)
    _show("Criticality coefficient across delay splits", table)
    spread = float(table["T_coeff"].max() - table["T_coeff"].min())
    logger.info("Split spread of T: %.3e", spread)
    return [write_csv(out_dir, name="lyapunov.csv", frame=table)]


def cmd_montecarlo(cfg: RunConfig, out_dir: Path) -> List[Path]:
    summary = montecarlo_criticality(cfg.n_samples, cfg.seed, threads=cfg.threads)
    payload = {
        "accepted": summary.accepted,
        "rejected": summary.rejected,
        "failed": summary.failed,
        "fraction_positive": summary.fraction_positive,
        "min_T": summary.min_T,
        "seed": cfg.seed,
    }
    _show_mapping("Criticality sign over random loops", payload)
    return [
        write_csv(out_dir, name="montecarlo.csv", frame=summary.samples),
        write_json(out_dir, name="montecarlo_summary.json", payload=payload),
    ]


def cmd_calibrate_p53(cfg: RunConfig, out_dir: Path) -> List[Path]:
    result = calibrate_p53(cfg.half_life, cfg.delay, cfg.observed_period)
    _show_mapping("Calibration", result)
    return [write_json(out_dir, name="calibrate_p53.json", payload=result)]


def cmd_hill_compare(cfg: RunConfig, out_dir: Path) -> List[Path]:
    result = hill_compare(cfg.params)
    _show_mapping("Logistic against Hill regulation", result)
    return [write_json(out_dir, name="hill_compare.json", payload=result)]


def cmd_figures(cfg: RunConfig, which: str, out_dir: Path) -> List[Path]:
    params = cfg.params
    eq = solve_equilibrium(params)
    if which == "regimes":
        frames = {}
        for tau in REGIME_DELAYS:
            traj = integrate(params.with_total_delay(tau), onset_history(eq), REGIME_HORIZON, cfg.rtol, cfg.atol)
            frames[tau] = traj.to_frame(0.05)
        data = pd.concat([f.assign(tau=tau) for tau, f in frames.items()], ignore_index=True)
        csv = write_csv(out_dir, name="regimes.csv", frame=data)
        svg = figures.plot_regimes(frames, (eq.x1_star, eq.x2_star), Path(out_dir) / "regimes.svg", csv.name)
        return [csv, svg]
    if which == "bifurcation":
        result = sweep_bifurcation(
            params, cfg.tau_grid, window=cfg.window, rtol=cfg.rtol, atol=cfg.atol, threads=cfg.threads
        )
        hopf = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)[0]
        lyap = general_lyapunov(split_params(params, hopf), eq, hopf, taylor_coefficients(params, eq))
        csv = write_csv(out_dir, name="bifurcation.csv", frame=result.table)
        svg = figures.plot_bifurcation(
            result.table, result.tau_c, result.prefactor, Path(out_dir) / "bifurcation.svg", csv.name, T_coeff=lyap.T_coeff
        )
        return [csv, svg]
    if which == "period":
        grid = sorted(set(cfg.tau_grid) | set(PERIOD_FIGURE_EXTRA))
        result = sweep_bifurcation(params, grid, window=cfg.window, rtol=cfg.rtol, atol=cfg.atol, threads=cfg.threads)
        hopf = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)[0]
        trans = transversality(eq.A, eq.B, params.gamma1, params.gamma2)
        csv = write_csv(out_dir, name="period.csv", frame=result.table)
        svg = figures.plot_period(
            result.table,
            hopf.tau_c,
            hopf.T_c,
            linear_period_slope(hopf, trans),
            relaxation_offset(params).C_inf,
            Path(out_dir) / "period.svg",
            csv.name,
        )
        relax = relaxation_check(params, RELAXATION_DELAYS, rtol=cfg.rtol, atol=cfg.atol, threads=cfg.threads)
        _show("Deep-relaxation offset", relax)
        return [csv, svg, write_csv(out_dir, name="relaxation.csv", frame=relax)]
    if which == "eigtraj":
        hopf = critical_delays(eq.A, eq.B, params.gamma1, params.gamma2, k_max=0)
        if not hopf:
            raise DomainError("no Hopf point: the leading root never reaches the imaginary axis")
        path, _ = trace_two_gene(params, max(0.6, 3.0 * hopf[0].tau_c))
        csv = write_csv(out_dir, name="eigtraj.csv", frame=_root_frame(path))
        svg = figures.plot_eigtraj(path, hopf[0].omega_c, Path(out_dir) / "eigtraj.svg", csv.name)
        return [csv, svg]
    raise DomainError(f"figure selector must be regimes, bifurcation, period or eigtraj, got {which!r}")
