"""Experiment runner.

    pgalign run --config run.cfg [--set key=value ...]
    pgalign gradcheck
    pgalign dump-config

Config files are flat ``key = value`` lines; ``#`` starts a comment. Keys given
with ``--set`` override the file. Unknown keys are rejected.

Exit codes: 0 success, 1 configuration error, 2 aborted run.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from pgalign.diagnostics import fmt_float
from pgalign.experiments import (
    METHODS,
    SpuriousSettings,
    ZDT1Settings,
    method_config,
    run_spurious_seed,
    run_zdt1_seed,
)
from pgalign.gradcheck import shipped_objectives
from pgalign.objective import check_gradient
from pgalign.optimizer import PGAConfig, StepAborted
from pgalign.params import dump_params

EXPERIMENTS = ("zdt1", "spurious")

# per-experiment PGAConfig defaults layered over the dataclass defaults
EXPERIMENT_DEFAULTS = {
    "zdt1": {"eta0": 0.01, "total_iters": 2000},
    "spurious": {"eta0": 0.1, "total_iters": 1000},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSpec:
    experiment: str
    method: str
    seeds: tuple[int, ...]
    cfg: PGAConfig
    testbed: object
    output_dir: Path


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_seeds(text: str) -> tuple[int, ...]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = tuple(range(int(lo), int(hi) + 1))
    else:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    if not seeds or any(s < 0 for s in seeds):
        raise ValueError(f"seeds must be a nonempty list of unsigned integers: {text!r}")
    return seeds


def _field_parsers(cls) -> dict:
    parsers = {}
    for f in fields(cls):
        kind = type(getattr(cls(), f.name))
        parsers[f.name] = _parse_bool if kind is bool else kind
    return parsers


CFG_KEYS = _field_parsers(PGAConfig)
CFG_ALIASES = {"lambda": "lam", "T": "total_iters"}
TESTBED_CLASSES = {"zdt1": ZDT1Settings, "spurious": SpuriousSettings}
TESTBED_KEYS = {name: _field_parsers(cls) for name, cls in TESTBED_CLASSES.items()}


def read_config_file(path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def parse_config(path=None, overrides: Sequence[str] = ()) -> RunSpec:
    """Build a validated :class:`RunSpec` from a config file and ``key=value`` overrides."""
    raw = read_config_file(path) if path is not None else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        raw[key] = value

    for key in ("experiment", "method"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    experiment, method = raw.pop("experiment"), raw.pop("method")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")

    seeds = (0,)
    output_dir = Path("runs") / f"{experiment}-{method}"
    cfg_values = dict(EXPERIMENT_DEFAULTS[experiment])
    explicit_cfg = set()
    testbed_values = {}
    testbed_keys = TESTBED_KEYS[experiment]
    for key, value in raw.items():
        try:
            if key == "seeds":
                seeds = parse_seeds(value)
            elif key == "output_dir":
                output_dir = Path(value)
            elif CFG_ALIASES.get(key, key) in CFG_KEYS:
                name = CFG_ALIASES.get(key, key)
                cfg_values[name] = CFG_KEYS[name](value)
                explicit_cfg.add(name)
            elif key in testbed_keys:
                testbed_values[key] = testbed_keys[key](value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc

    forced = {"erm": ("rho_ga", "rho_gn"), "align_only": ("rho_gn",), "pga": ()}[method]
    for name in forced:
        if name in explicit_cfg and cfg_values[name] != 0:
            raise ConfigError(f"method={method} fixes {name}=0; remove the explicit {name}={cfg_values[name]}")
    try:
        cfg = method_config(PGAConfig(**cfg_values), method)
        testbed = TESTBED_CLASSES[experiment](**testbed_values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _check_testbed(testbed)
    return RunSpec(experiment, method, seeds, cfg, testbed, output_dir)


def _check_testbed(testbed) -> None:
    if isinstance(testbed, ZDT1Settings):
        if testbed.n_vars < 2:
            raise ConfigError("n_vars must be at least 2")
        return
    s = testbed
    for name in ("p_src", "p_tgt"):
        if not 0 <= getattr(s, name) <= 1:
            raise ConfigError(f"{name} must lie in [0, 1]")
    if not s.C > 1:
        raise ConfigError("C must exceed 1")
    if s.noise_dim < 1 or s.n_samples < 1 or s.anchor_iters < 1:
        raise ConfigError("noise_dim, n_samples and anchor_iters must be positive")
    if not 0 <= s.batch_size <= s.n_samples:
        raise ConfigError("batch_size must lie in [0, n_samples]")
    if not (s.anchor_eta > 0 and s.init_scale >= 0):
        raise ConfigError("anchor_eta must be positive and init_scale nonnegative")


def _summary_rows(spec: RunSpec, per_seed: dict[int, dict]) -> list[tuple[str, float]]:
    rows = []
    metric_names = list(next(iter(per_seed.values())))
    for name in metric_names:
        vals = [per_seed[s][name] for s in spec.seeds]
        for s, v in zip(spec.seeds, vals):
            rows.append((f"{name}_seed{s}", v))
        mean = math.fsum(vals) / len(vals)
        stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        rows.append((f"{name}_mean", mean))
        rows.append((f"{name}_stderr", stderr))
    return rows


def run(spec: RunSpec) -> dict[str, float]:
    """Run every seed, write per-seed trace/params files and ``summary.csv``."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = run_zdt1_seed if spec.experiment == "zdt1" else run_spurious_seed
    per_seed = {}
    for seed in spec.seeds:
        result = runner(spec.cfg, spec.testbed, seed)
        result.trace.write_csv(out / f"trace_seed{seed}.csv")
        dump_params(result.params, out / f"params_seed{seed}.txt")
        per_seed[seed] = result.metrics
    rows = _summary_rows(spec, per_seed)
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerow(["experiment", spec.experiment])
        writer.writerow(["method", spec.method])
        for key, value in rows:
            writer.writerow([key, fmt_float(value)])
    return dict(rows)


def effective_defaults(experiment: Optional[str] = None) -> list[str]:
    lines = []
    for exp in [experiment] if experiment else EXPERIMENTS:
        cfg = PGAConfig(**EXPERIMENT_DEFAULTS[exp])
        lines.append(f"experiment = {exp}")
        lines.append("method = pga")
        lines.append("seeds = 0")
        for f in fields(cfg):
            value = getattr(cfg, f.name)
            lines.append(f"{'lambda' if f.name == 'lam' else f.name} = {value}")
        for f in fields(TESTBED_CLASSES[exp]):
            lines.append(f"{f.name} = {getattr(TESTBED_CLASSES[exp](), f.name)}")
        lines.append("")
    return lines


def gradcheck(n_points: int = 100, seed: int = 0, rel_tol: float = 1e-5, abs_tol: float = 1e-7) -> bool:
    """Check every shipped analytic objective against central differences."""
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, obj, sampler in shipped_objectives(rng):
        worst, failures = 0.0, 0
        for _ in range(n_points):
            report = check_gradient(obj, sampler(), rel_tol=rel_tol, abs_tol=abs_tol)
            worst = max(worst, report.worst_error)
            failures += not report.ok
        all_ok &= failures == 0
        status = "ok" if failures == 0 else "FAIL"
        print(f"{status:4s} {name:24s} points={n_points} failures={failures} worst_abs_err={worst:.3e}")
    return all_ok


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="pgalign", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment over seeds")
    p_run.add_argument("--config", help="key=value config file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p_grad = sub.add_parser("gradcheck", help="finite-difference check of all shipped objectives")
    p_grad.add_argument("--points", type=int, default=100)
    p_grad.add_argument("--seed", type=int, default=0)
    p_dump = sub.add_parser("dump-config", help="print effective defaults")
    p_dump.add_argument("--experiment", choices=EXPERIMENTS)
    args = parser.parse_args(argv)

    if args.command == "dump-config":
        print("\n".join(effective_defaults(args.experiment)))
        return 0
    if args.command == "gradcheck":
        t0 = time.perf_counter()
        ok = gradcheck(args.points, args.seed)
        print(f"{'passed' if ok else 'failed'} in {time.perf_counter() - t0:.2f}s")
        return 0 if ok else 2

    try:
        spec = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    try:
        summary = run(spec)
    except (StepAborted, FloatingPointError, ValueError) as exc:
        print(f"runtime-abort: {exc}", file=sys.stderr)
        return 2
    for key, value in summary.items():
        if key.endswith("_mean"):
            print(f"{key} = {value:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
