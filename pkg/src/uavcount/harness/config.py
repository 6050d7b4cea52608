"""Experiment config files: a flat YAML mapping of ExperimentSpec fields."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import yaml

from .experiments import ConfigError, ExperimentSpec

FIELDS = {f.name for f in dataclasses.fields(ExperimentSpec)}


def _expand_grid(value):
    """Accept a list, a scalar, or ``{start, stop, step}`` (stop inclusive)."""
    if isinstance(value, dict):
        try:
            start, stop, step = float(value["start"]), float(value["stop"]), float(value["step"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"grid range needs numeric start/stop/step: {value}") from exc
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid range {value}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        vals = [round(start + i * step, 10) for i in range(n)]
        if all(isinstance(value[k], int) for k in ("start", "stop", "step")):
            vals = [int(v) for v in vals]
        return vals
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def spec_from_mapping(data: dict, **overrides) -> ExperimentSpec:
    data = dict(data or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(data) - FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "kind" not in data:
        raise ConfigError("config must set 'kind'")
    if "grid" in data:
        data["grid"] = _expand_grid(data["grid"])
    for key in ("detectors", "classifiers"):
        if key in data and isinstance(data[key], str):
            data[key] = [s.strip() for s in data[key].split(",") if s.strip()]
    try:
        return ExperimentSpec(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_spec(path: str | Path, **overrides) -> ExperimentSpec:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a key-value mapping")
    return spec_from_mapping(data, **overrides)


# Settings stated for each published figure; unstated grids and trial counts
# are filled with the defaults documented in the README.
PAPER_PRESETS: dict[str, dict] = {
    "fig3_pd_vs_snr": dict(kind="pd_vs_snr", grid={"start": -25.0, "stop": 0.0, "step": 2.5},
                           M=64, N=200, K=3, p_fa=1e-4, trials=2000),
    "fig4_pd_vs_N": dict(kind="pd_vs_N", grid={"start": 100, "stop": 300, "step": 20},
                         M=64, K=3, snr_db=-20.0, p_fa=1e-4, trials=2000),
    "fig5_roc": dict(kind="roc", grid=[1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
                     M=64, N=200, K=3, snr_db=-20.0, trials=2000),
    "fig6_acc_vs_snr": dict(kind="acc_vs_snr", grid={"start": -20.0, "stop": 0.0, "step": 2.5},
                            M=64, N=200, K_max=3, train_samples_per_class=10, repetitions=20),
    "acc_vs_M": dict(kind="acc_vs_M", grid=[16, 32, 48, 64, 96, 128],
                     N=200, snr_db=-15.0, K_max=3, train_samples_per_class=10, repetitions=20),
    "fig7_criteria_vs_M": dict(kind="criteria_vs_M", grid={"start": 8, "stop": 64, "step": 4},
                               N=200, K=3, snr_db=0.0, trials=500),
    "fig8_criteria_vs_snr": dict(kind="criteria_vs_snr", grid={"start": -20.0, "stop": 0.0, "step": 5.0},
                                 M=32, N=200, K_max=3, train_samples_per_class=10, repetitions=5),
    "pipeline": dict(kind="pipeline", grid=[-20.0, -15.0, -10.0], M=64, N=200, K_max=3, p_fa=1e-4,
                     train_samples_per_class=10),
}


def emit_paper_presets(out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, data in PAPER_PRESETS.items():
        p = out / f"{name}.yaml"
        p.write_text(yaml.safe_dump({"name": name, **data}, sort_keys=False))
        paths.append(p)
    return paths
