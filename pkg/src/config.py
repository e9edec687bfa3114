from __future__ import annotations

import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from .errors import ConfigError, DomainError
from .models import CyclicLoopParams, TwoGeneParams

# Load local .env if present
load_dotenv()


def get_default_out_dir() -> Path:
    return Path(os.getenv("HOPF_OUT_DIR", "results").strip() or "results")


def get_default_threads() -> int:
    raw = os.getenv("HOPF_THREADS", "1").strip()
    try:
        val = int(raw)
    except ValueError:
        val = 1
    return max(1, min(val, 64))


def get_default_seed() -> int:
    raw = os.getenv("HOPF_SEED", "20240101").strip()
    try:
        return int(raw)
    except ValueError:
        return 20240101


def get_log_level() -> int:
    name = os.getenv("HOPF_LOG_LEVEL", "INFO").strip().upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def _table2_grid() -> Tuple[float, ...]:
    return tuple(float(t) for t in np.linspace(0.05, 0.60, 25))


@dataclass(frozen=True)
class RunConfig:
    params: TwoGeneParams = field(default_factory=TwoGeneParams.canonical)
    ngene: CyclicLoopParams = field(
        default_factory=lambda: CyclicLoopParams.symmetric(3, kappa=2.0, gamma=0.5, theta=2.0, lam=1.5)
    )
    tau_grid: Tuple[float, ...] = field(default_factory=_table2_grid)
    lambda_grid: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0)
    onset_grid: Tuple[float, ...] = (0.135, 0.140, 0.145, 0.150, 0.165, 0.188, 0.200, 0.300)
    splits: Tuple[Tuple[float, float], ...] = ((0.10, 0.10), (0.05, 0.15), (0.02, 0.18))
    rtol: float = 1e-9
    atol: float = 1e-12
    onset_rtol: float = 1e-10
    window: Tuple[float, float] = (300.0, 400.0)
    onset_window: Tuple[float, float] = (400.0, 600.0)
    out_dir: Path = field(default_factory=get_default_out_dir)
    seed: int = field(default_factory=get_default_seed)
    threads: int = field(default_factory=get_default_threads)
    half_life: float = 1.0
    delay: float = 1.0
    observed_period: float = 5.5
    n_samples: int = 4000

    def resolved(self) -> Dict[str, Any]:
        p = self.params
        loop = self.ngene
        return {
            "params": {
                "kappa1": p.kappa1,
                "gamma1": p.gamma1,
                "kappa2": p.kappa2,
                "gamma2": p.gamma2,
                "theta1": p.theta1,
                "theta2": p.theta2,
                "lambda": p.lam,
                "tau1": p.tau1,
                "tau2": p.tau2,
            },
            "ngene": {
                "kappa": list(loop.kappa),
                "gamma": list(loop.gamma),
                "theta": list(loop.theta),
                "tau": list(loop.tau),
                "epsilon": list(loop.epsilon),
                "lambda": loop.lam,
            },
            "grids": {
                "tau": list(self.tau_grid),
                "lambda": list(self.lambda_grid),
                "onset_tau": list(self.onset_grid),
                "splits": [list(s) for s in self.splits],
            },
            "solver": {"rtol": self.rtol, "atol": self.atol, "onset_rtol": self.onset_rtol},
            "measure": {"window": list(self.window), "onset_window": list(self.onset_window)},
            "run": {
                "out_dir": str(self.out_dir),
                "seed": self.seed,
                "threads": self.threads,
                "half_life": self.half_life,
                "delay": self.delay,
                "observed_period": self.observed_period,
                "n_samples": self.n_samples,
            },
        }


_SECTIONS: Dict[str, set] = {
    "params": {"kappa1", "gamma1", "kappa2", "gamma2", "theta1", "theta2", "lambda", "tau1", "tau2"},
    "ngene": {"kappa", "gamma", "theta", "tau", "epsilon", "lambda"},
    "grids": {"tau", "lambda", "onset_tau", "splits"},
    "solver": {"rtol", "atol", "onset_rtol"},
    "measure": {"window", "onset_window"},
    "run": {"out_dir", "seed", "threads", "half_life", "delay", "observed_period", "n_samples"},
}


def _read_raw(path: Path) -> Dict[str, Any]:
    try:
        if path.suffix.lower() == ".json":
            return json.loads(path.read_text(encoding="utf-8"))
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config file {path} is not valid: {exc}") from exc


def _check_keys(raw: Dict[str, Any]) -> None:
    for section, body in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section '{section}'")
        if not isinstance(body, dict):
            raise ConfigError(f"config section '{section}' must be a table")
        for key in body:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown config key '{section}.{key}'")


def _pair(value: Any, key: str) -> Tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{key}' must be a two-element list")
    return float(value[0]), float(value[1])


def config_from_dict(raw: Dict[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """Overlay a parsed config mapping on `base` (defaults when omitted)."""
    _check_keys(raw)
    cfg = base or RunConfig()
    updates: Dict[str, Any] = {}
    try:
        if "params" in raw:
            body = dict(raw["params"])
            if "lambda" in body:
                body["lam"] = body.pop("lambda")
            updates["params"] = replace(cfg.params, **{k: float(v) for k, v in body.items()})
        if "ngene" in raw:
            body = dict(raw["ngene"])
            current = cfg.ngene
            updates["ngene"] = CyclicLoopParams(
                kappa=tuple(float(v) for v in body.get("kappa", current.kappa)),
                gamma=tuple(float(v) for v in body.get("gamma", current.gamma)),
                theta=tuple(float(v) for v in body.get("theta", current.theta)),
                tau=tuple(float(v) for v in body.get("tau", current.tau)),
                epsilon=tuple(int(v) for v in body.get("epsilon", current.epsilon)),
                lam=float(body.get("lambda", current.lam)),
            )
        grids = raw.get("grids", {})
        if "tau" in grids:
            updates["tau_grid"] = tuple(float(v) for v in grids["tau"])
        if "lambda" in grids:
            updates["lambda_grid"] = tuple(float(v) for v in grids["lambda"])
        if "onset_tau" in grids:
            updates["onset_grid"] = tuple(float(v) for v in grids["onset_tau"])
        if "splits" in grids:
            updates["splits"] = tuple(_pair(s, "grids.splits") for s in grids["splits"])
        for key in ("rtol", "atol", "onset_rtol"):
            if key in raw.get("solver", {}):
                updates[key] = float(raw["solver"][key])
        measure = raw.get("measure", {})
        if "window" in measure:
            updates["window"] = _pair(measure["window"], "measure.window")
        if "onset_window" in measure:
            updates["onset_window"] = _pair(measure["onset_window"], "measure.onset_window")
        run = raw.get("run", {})
        if "out_dir" in run:
            updates["out_dir"] = Path(str(run["out_dir"]))
        for key in ("seed", "threads", "n_samples"):
            if key in run:
                updates[key] = int(run[key])
        for key in ("half_life", "delay", "observed_period"):
            if key in run:
                updates[key] = float(run[key])
    except DomainError as exc:
        raise ConfigError(f"invalid parameter values: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    return replace(cfg, **updates)


def load_run_config(path: Optional[Path] = None) -> RunConfig:
    if path is None:
        return RunConfig()
    return config_from_dict(_read_raw(Path(path)))
