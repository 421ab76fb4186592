"""Command-line driver: ``semiclassical run <experiment>`` and ``semiclassical list``.

Config files are JSON objects with the optional keys

``seed``
    integer seed (default 0);
``out``
    output directory (default ``results/<experiment>``);
``parallel``
    run independent t-sweeps in worker processes;
``params``
    object overriding experiment parameters (see ``semiclassical list -v``).

Values given on the command line win over the file, which wins over the
defaults. Exit status: 0 when every invariant holds, 1 when one fails
(the failures are listed in ``result.json``), 2 for configuration errors,
in which case no artifacts are written.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import sys
from pathlib import Path

from . import __version__
from .errors import SemiclassicalError
from .experiments import EXPERIMENTS, ConfigError
from .report import dumps, write_artifacts

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def list_text(verbose: bool = False) -> str:
    """Deterministic table of experiments and the identities they verify."""
    width = max(len(n) for n in EXPERIMENTS)
    lines = []
    for name, e in EXPERIMENTS.items():
        lines.append(f"{name:<{width}}  {e.anchor}")
        if verbose:
            lines.append(f"{'':<{width}}  defaults: {json.dumps(e.defaults, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def _coerce(key: str, value, default):
    """Match ``value`` to the type of the default parameter."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list")
        if default and all(isinstance(d, (int, float)) and not isinstance(d, bool) for d in default):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError(f"{key}: expected a list of numbers")
            return [float(v) for v in value]
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string")
        return value
    return value


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - {"experiment", "seed", "out", "parallel", "params"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if not isinstance(cfg.get("params", {}), dict):
        raise ConfigError("params must be an object")
    return cfg


def resolve(name: str, cfg: dict, sets: dict, seed=None, out=None, parallel=False) -> dict:
    """Merge defaults, file and flags (flag > file > default) and validate."""
    if name not in EXPERIMENTS:
        raise KeyError(name)
    if cfg.get("experiment") not in (None, name):
        raise ConfigError(f"config is for {cfg['experiment']!r}, not {name!r}")
    exp = EXPERIMENTS[name]
    params = copy.deepcopy(exp.defaults)
    for src in (cfg.get("params", {}), sets):
        for k, v in src.items():
            if k not in params:
                raise ConfigError(f"unknown parameter {k!r} for {name}")
            params[k] = _coerce(k, v, exp.defaults[k])
    problems = exp.constraints(params)
    if problems:
        raise ConfigError("; ".join(problems))
    s = seed if seed is not None else cfg.get("seed", 0)
    if isinstance(s, bool) or not isinstance(s, int) or s < 0:
        raise ConfigError("seed must be a non-negative integer")
    return {
        "experiment": name,
        "params": params,
        "seed": s,
        "out": str(out if out is not None else cfg.get("out", Path("results") / name)),
        "parallel": bool(parallel or cfg.get("parallel", False)),
    }


def execute(resolved: dict, png: bool = True) -> tuple[int, dict]:
    """Run a resolved configuration and write its artifacts."""
    exp = EXPERIMENTS[resolved["experiment"]]
    outcome = exp.run(copy.deepcopy(resolved["params"]), resolved["seed"], parallel=resolved["parallel"])
    failures = [i["name"] for i in outcome.invariants if not i["passed"]]
    result = {
        "experiment": exp.name,
        "anchor": exp.anchor,
        "version": __version__,
        "seed": resolved["seed"],
        "config": {"params": resolved["params"], "seed": resolved["seed"]},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "metrics": outcome.metrics,
        "invariants": outcome.invariants,
        "failures": failures,
        "passed": not failures,
    }
    result = write_artifacts(resolved["out"], result, outcome.tables, outcome.plots, png=png)
    return (EXIT_OK if not failures else EXIT_FAIL), result


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semiclassical", description="Reproducible checks of the semiclassical operator calculus.")
    sub = ap.add_subparsers(dest="command", required=True)
    ls = sub.add_parser("list", help="list experiments")
    ls.add_argument("-v", "--verbose", action="store_true", help="also print default parameters")
    run = sub.add_parser("run", help="run an experiment ('all' runs every experiment)")
    run.add_argument("experiment")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a parameter (JSON literal)")
    run.add_argument("--parallel", action="store_true", help="run independent t-sweeps concurrently")
    run.add_argument("--no-png", action="store_true", help="skip the PNG preview")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_text(args.verbose))
        return EXIT_OK
    names = list(EXPERIMENTS) if args.experiment == "all" else [args.experiment]
    if names[0] not in EXPERIMENTS:
        sys.stderr.write(f"unknown experiment {args.experiment!r}; available:\n")
        sys.stderr.write(list_text())
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        sets = _parse_set(args.set)
        if len(names) > 1:
            if sets or cfg.get("params"):
                raise ConfigError("parameter overrides need a single experiment")
            base = Path(args.out or cfg.get("out", "results"))
            jobs = [resolve(n, {**cfg, "out": base / n}, {}, args.seed, None, args.parallel) for n in names]
        else:
            jobs = [resolve(names[0], cfg, sets, args.seed, args.out, args.parallel)]
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    code = EXIT_OK
    for job in jobs:
        try:
            status, result = execute(job, png=not args.no_png)
        except (ValueError, SemiclassicalError) as exc:
            sys.stderr.write(f"{job['experiment']}: {exc}\n")
            return EXIT_CONFIG
        mark = "PASS" if status == EXIT_OK else "FAIL"
        sys.stdout.write(f"{mark} {job['experiment']} -> {Path(job['out']) / 'result.json'}\n")
        for f in result["failures"]:
            sys.stdout.write(f"  failed: {f}\n")
        code = max(code, status)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
