"""Experiment configuration: defaults, JSON ingestion and validation.

A config file is a JSON object whose keys override the experiment defaults::

    {
      "chart": {"potential": "flat", "window": [-6, 6], "nodes": 512},
      "measure": {"name": "gaussian", "mean": 0.0, "var": 1.0},
      "epsilons": [0.4, 0.2, 0.1, 0.05],
      "trajectories": 100000,
      "step_divisor": 32,
      "seed": 42,
      "tolerances": {"slope_min": 1.8},
      "params": {}
    }

Nested mappings are merged key by key; lists and scalars replace the default.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ..errors import UsageError
from ..geometry import HessianChart, make_chart
from ..measures import Grid

LADDER = [0.4, 0.2, 0.1, 0.05]
FLAT_1D = {"potential": "flat", "window": [-6.0, 6.0], "nodes": 512}
QUARTIC_1D = {"potential": "quartic1d", "window": [-6.0, 6.0], "nodes": 512}
STD_NORMAL = {"name": "gaussian", "mean": 0.0, "var": 1.0}

BASE = {
    "chart": FLAT_1D,
    "measure": STD_NORMAL,
    "target": None,
    "epsilons": LADDER,
    "trajectories": 100_000,
    "step_divisor": 32,
    "seed": 42,
    "sinkhorn_tol": 1e-13,
    "tolerances": {},
    "params": {},
    "output": {"path": None, "format": "json"},
    "dump": False,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment settings; ``raw`` is the merged mapping echoed in reports."""

    experiment: str
    chart: Mapping[str, Any]
    measure: Mapping[str, Any] | None
    target: Mapping[str, Any] | None
    epsilons: tuple[float, ...]
    trajectories: int
    step_divisor: int
    seed: int
    sinkhorn_tol: float
    tolerances: Mapping[str, float]
    params: Mapping[str, Any]
    output_path: str | None = None
    output_format: str = "json"
    dump: bool = False
    raw: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        eps = self.epsilons
        if len(eps) < 3:
            raise UsageError("the eps ladder needs at least three values")
        if any(not (e > 0) for e in eps):
            raise UsageError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise UsageError("the eps ladder must be strictly decreasing")
        if self.trajectories < 1:
            raise UsageError("trajectories must be positive")
        if self.step_divisor < 20:
            raise UsageError("step_divisor must be at least 20 (h <= eps/20)")
        if self.output_format not in ("csv", "json"):
            raise UsageError("format must be csv or json")

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def param(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)

    def make_chart(self, spec: Mapping[str, Any] | None = None) -> HessianChart:
        spec = self.chart if spec is None else spec
        return make_chart(spec["potential"])

    def make_grid(self, spec: Mapping[str, Any] | None = None) -> Grid:
        spec = self.chart if spec is None else spec
        w = np.asarray(spec["window"], dtype=float)
        if w.ndim == 1:
            lo, hi = w[0], w[1]
        else:
            lo, hi = w[:, 0], w[:, 1]
        return Grid.uniform(lo, hi, spec["nodes"])


def _merge(base: dict, override: Mapping[str, Any]) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(dict(out[k]), v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_config(experiment: str, defaults: Mapping[str, Any] | None = None,
                 override: Mapping[str, Any] | None = None) -> ExperimentConfig:
    """Merge BASE, the experiment defaults and the user override, then validate."""
    raw = _merge(BASE, defaults or {})
    if override:
        unknown = set(override) - set(BASE) - {"experiment"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        raw = _merge(raw, {k: v for k, v in override.items() if k != "experiment"})
    raw["experiment"] = experiment
    out = raw.get("output") or {}
    try:
        return ExperimentConfig(
            experiment=experiment,
            chart=raw["chart"],
            measure=raw.get("measure"),
            target=raw.get("target"),
            epsilons=tuple(float(e) for e in raw["epsilons"]),
            trajectories=int(raw["trajectories"]),
            step_divisor=int(raw["step_divisor"]),
            seed=int(raw["seed"]),
            sinkhorn_tol=float(raw["sinkhorn_tol"]),
            tolerances=dict(raw.get("tolerances") or {}),
            params=dict(raw.get("params") or {}),
            output_path=out.get("path"),
            output_format=out.get("format", "json"),
            dump=bool(raw.get("dump", False)),
            raw=raw,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed config: {exc}") from exc


def load_config_file(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data
