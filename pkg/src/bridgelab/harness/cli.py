"""Command line entry point: ``bridgelab <experiment> [--config file.json] [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import BridgelabError, UsageError
from .config import load_config_file
from .experiments import REGISTRY, experiment_names, make_config, run
from .report import emit


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bridgelab",
        description="Run a named bridge experiment over an eps ladder and report pass/fail per criterion.",
    )
    p.add_argument("experiment", help="experiment name, 'all' to run every experiment, or 'list'")
    p.add_argument("--config", type=Path, help="JSON file overriding the experiment defaults")
    p.add_argument("--out", type=Path, help="report path (a directory when running 'all')")
    p.add_argument("--format", choices=("csv", "json"), help="report format (default json)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed (overrides the config)")
    p.add_argument("--epsilons", type=float, nargs="+", help="eps ladder (overrides the config)")
    p.add_argument("--trajectories", type=int, help="Monte Carlo trajectories N")
    p.add_argument("--dump", action="store_true", help="also write raw couplings, fields and ensembles")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    p.add_argument("--quiet", action="store_true", help="print only the criterion lines")
    return p


def _override(args, base: dict) -> dict:
    over = dict(base)
    if args.seed is not None:
        over["seed"] = args.seed
    if args.epsilons is not None:
        over["epsilons"] = args.epsilons
    if args.trajectories is not None:
        over["trajectories"] = args.trajectories
    out = dict(over.get("output") or {})
    if args.format is not None:
        out["format"] = args.format
    if out:
        over["output"] = out
    if args.dump:
        over["dump"] = True
    return over


def _run_one(name: str, args, file_cfg: dict, out_path: Path | None) -> bool:
    cfg = make_config(name, _override(args, file_cfg))
    path = out_path if out_path is not None else (Path(cfg.output_path) if cfg.output_path else None)
    dump_dir = None
    if cfg.dump:
        dump_dir = (path.parent if path is not None else Path(".")) / f"{name}_dump"
    report = run(cfg, dump_dir)
    text = emit(report, cfg.output_format, path, include_timing=args.timing)
    if path is None and not args.quiet:
        sys.stdout.write(text)
    for line in report.summary_lines():
        print(line, file=sys.stderr if path is None and not args.quiet else sys.stdout)
    if args.timing:
        print(f"[{name}] wall clock {report.wall_clock:.1f} s")
    return report.passed


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.experiment == "list":
            for name in experiment_names():
                print(f"{name:24s} {REGISTRY[name][2]}")
            return 0
        file_cfg = load_config_file(args.config) if args.config is not None else {}
        if args.experiment == "all":
            if args.out is not None:
                args.out.mkdir(parents=True, exist_ok=True)
            ok = True
            for name in experiment_names():
                fmt = args.format or (file_cfg.get("output") or {}).get("format", "json")
                path = args.out / f"{name}.{fmt}" if args.out is not None else None
                ok = _run_one(name, args, file_cfg, path) and ok
            return 0 if ok else 1
        return 0 if _run_one(args.experiment, args, file_cfg, args.out) else 1
    except UsageError as exc:
        print(f"bridgelab: usage error: {exc}", file=sys.stderr)
        return 2
    except BridgelabError as exc:
        print(f"bridgelab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"bridgelab: I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
