"""Raw-data dumps: measures, fields, couplings, ensembles and kernels.

Tables are CSV with a header row. Kernels are written as row-major float64
``<name>.bin`` plus a ``<name>.json`` sidecar holding shape, nodes and metadata.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bridge import KernelMatrix
from .dynamics import PathEnsemble
from .measures import GridMeasure


def _coord_names(d: int) -> list[str]:
    return [f"x{k}" for k in range(d)]


def dump_measure_csv(path: str | Path, measure: GridMeasure) -> Path:
    path = Path(path)
    pts = measure.points
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_coord_names(pts.shape[1]) + ["mass", "lebesgue_density"])
        for p, m, dens in zip(pts, measure.mass, measure.lebesgue_density()):
            w.writerow([repr(float(v)) for v in p] + [repr(float(m)), repr(float(dens))])
    return path


def dump_field_csv(path: str | Path, points: np.ndarray, values: np.ndarray) -> Path:
    path = Path(path)
    pts = np.asarray(points, float).reshape(len(points), -1)
    vals = np.asarray(values, float).reshape(len(points), -1)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_coord_names(pts.shape[1]) + [f"v{k}" for k in range(vals.shape[1])])
        for p, v in zip(pts, vals):
            w.writerow([repr(float(a)) for a in np.concatenate([p, v])])
    return path


def dump_coupling_csv(path: str | Path, coupling: np.ndarray, x: np.ndarray, z: np.ndarray,
                      min_mass: float = 0.0) -> Path:
    """Long format ``i, j, x, z, mass``; pairs with mass <= ``min_mass`` are skipped."""
    path = Path(path)
    x = np.asarray(x, float).reshape(-1)
    z = np.asarray(z, float).reshape(-1)
    ii, jj = np.nonzero(coupling > min_mass)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "z", "mass"])
        for i, j in zip(ii, jj):
            w.writerow([int(i), int(j), repr(float(x[i])), repr(float(z[j])), repr(float(coupling[i, j]))])
    return path


def dump_ensemble_csv(path: str | Path, ensemble: PathEnsemble) -> Path:
    path = Path(path)
    d = ensemble.initial.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory"] + [f"init_{c}" for c in _coord_names(d)]
                   + [f"term_{c}" for c in _coord_names(d)] + ["clipped"])
        for k, (a, b, c) in enumerate(zip(ensemble.initial, ensemble.terminal, ensemble.clipped)):
            w.writerow([k] + [repr(float(v)) for v in a] + [repr(float(v)) for v in b] + [int(bool(c))])
    meta = Path(str(path) + ".json")
    meta.write_text(json.dumps(ensemble.describe(), indent=2, sort_keys=True) + "\n")
    return path


def dump_kernel(stem: str | Path, kernel: KernelMatrix, grid=None) -> tuple[Path, Path]:
    """Write ``exp(log_values)`` as row-major float64 plus a JSON sidecar."""
    # stems such as "heat_eps0.1" contain dots, so suffixes are appended rather than replaced
    binp, sidecar = Path(f"{stem}.bin"), Path(f"{stem}.json")
    np.ascontiguousarray(np.exp(kernel.log_values), dtype="<f8").tofile(binp)
    meta = {
        **kernel.describe(),
        "dtype": "float64 little-endian",
        "order": "row-major",
        "rows": kernel.grid_x.points.tolist(),
        "cols": kernel.grid_z.points.tolist(),
    }
    if grid is not None:
        meta["grid"] = grid.describe()
    sidecar.write_text(json.dumps(meta, sort_keys=True) + "\n")
    return binp, sidecar


def load_kernel(stem: str | Path) -> tuple[np.ndarray, dict]:
    meta = json.loads(Path(f"{stem}.json").read_text())
    vals = np.fromfile(f"{stem}.bin", dtype="<f8").reshape(meta["shape"])
    return vals, meta
