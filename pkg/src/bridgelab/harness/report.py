"""Rate fits, pass/fail criteria and report emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError, UsageError


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log eps, log value)."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]
    status: str = "fitted"

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "points": [list(p) for p in self.points], "status": self.status}


def rate_fit(points, noise_floor: float | None = None) -> RateFit:
    """Ordinary least squares of log value on log eps.

    Parameters
    ----------
    points : sequence of (eps, value)
    noise_floor : float, optional
        When every value is at most this, no slope is fitted and the status is
        ``"below noise floor"`` (slope and intercept are NaN).

    Raises
    ------
    DomainError
        Fewer than three points, or a nonpositive value above the noise floor.
    """
    pts = [(float(e), float(v)) for e, v in points]
    if len(pts) < 3:
        raise DomainError("a rate fit needs at least three points")
    vals = np.array([v for _, v in pts])
    if noise_floor is not None and np.all(np.abs(vals) <= noise_floor):
        return RateFit(math.nan, math.nan, math.nan, tuple((math.log(e), math.nan) for e, _ in pts),
                       "below noise floor")
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise DomainError("rate fits need positive finite values")
    x = np.log([e for e, _ in pts])
    y = np.log(vals)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0),
                   tuple(zip(x.tolist(), y.tolist())))


@dataclass
class Criterion:
    """One acceptance check. ``passed`` is None for report-only items."""

    id: str
    description: str
    passed: bool | None
    detail: str = ""

    @property
    def status(self) -> str:
        return "report" if self.passed is None else ("pass" if self.passed else "fail")


@dataclass
class Row:
    epsilon: float
    quantity: str
    value: float
    se: float | None = None


@dataclass
class ExperimentReport:
    """Everything an experiment produced. ``wall_clock`` is kept out of emitted files."""

    experiment: str
    config: dict
    rows: list[Row] = field(default_factory=list)
    fits: dict[str, RateFit] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    criteria: list[Criterion] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    wall_clock: float = 0.0

    def add(self, epsilon: float, quantity: str, value: float, se: float | None = None) -> None:
        self.rows.append(Row(float(epsilon), quantity, float(value), None if se is None else float(se)))

    def series(self, quantity: str) -> list[tuple[float, float]]:
        return [(r.epsilon, r.value) for r in self.rows if r.quantity == quantity]

    def check(self, cid: str, description: str, passed: bool | None, detail: str = "") -> Criterion:
        c = Criterion(cid, description, None if passed is None else bool(passed), detail)
        self.criteria.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria if c.passed is not None)

    def quantities(self) -> list[str]:
        seen: list[str] = []
        for r in self.rows:
            if r.quantity not in seen:
                seen.append(r.quantity)
        return seen

    def as_dict(self, include_timing: bool = False) -> dict:
        out = {
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.config.get("seed"),
            "rows": [asdict(r) for r in sorted(self.rows, key=lambda r: (-r.epsilon, r.quantity))],
            "fits": {k: v.as_dict() for k, v in self.fits.items()},
            "scalars": self.scalars,
            "criteria": [{"id": c.id, "description": c.description, "status": c.status,
                          "detail": c.detail} for c in self.criteria],
            "notes": self.notes,
            "passed": self.passed,
        }
        if include_timing:
            out["wall_clock"] = self.wall_clock
        return out

    def summary_lines(self) -> list[str]:
        return [f"{c.id} [{self.experiment}] {c.status.upper()}: {c.description}"
                + (f" ({c.detail})" if c.detail else "") for c in self.criteria]


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; encode them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(report: ExperimentReport, include_timing: bool = False) -> str:
    return json.dumps(_clean(report.as_dict(include_timing)), indent=2, sort_keys=True,
                      default=_json_default) + "\n"


def to_csv(report: ExperimentReport, include_timing: bool = False) -> str:
    """One data row per (eps, quantity); config, scalars and criteria go in '#' comment lines."""
    buf = io.StringIO()
    d = _clean(report.as_dict(include_timing))
    buf.write(f"# experiment: {report.experiment}\n")
    buf.write(f"# seed: {d['seed']}\n")
    buf.write("# config: " + json.dumps(d["config"], sort_keys=True, default=_json_default) + "\n")
    for k, v in sorted(d["scalars"].items()):
        buf.write(f"# scalar {k}: {v!r}\n")
    for name, fit in sorted(d["fits"].items()):
        buf.write(f"# fit {name}: slope={fit['slope']!r} status={fit['status']}\n")
    for c in d["criteria"]:
        buf.write(f"# {c['id']} {c['status']}: {c['description']}\n")
    if include_timing:
        buf.write(f"# wall_clock: {report.wall_clock:.3f}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "quantity", "value", "se"])
    for r in d["rows"]:
        w.writerow([repr(r["epsilon"]), r["quantity"], repr(r["value"]) if isinstance(r["value"], float) else r["value"],
                    "" if r["se"] is None else repr(r["se"])])
    return buf.getvalue()


def emit(report: ExperimentReport, fmt: str = "json", path: str | Path | None = None,
         include_timing: bool = False) -> str:
    """Render the report as CSV or JSON and write it to ``path`` (if given).

    Raises
    ------
    UsageError
        Unknown format.
    OSError
        The path cannot be written.
    """
    if fmt == "json":
        text = to_json(report, include_timing)
    elif fmt == "csv":
        text = to_csv(report, include_timing)
    else:
        raise UsageError(f"unknown format {fmt!r}; use csv or json")
    if path is not None:
        Path(path).write_text(text)
    return text
