"""Command-line entry point.

Configuration comes from an optional JSON file and from flags; flags win.
Exit codes: 0 success, 1 numerical failure or I/O error, 2 usage error.
Progress lines go to standard error, results to the ``out`` file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import calibrate_profile
from .dictionaries import build_haar, build_trig
from .errors import (CalibrationError, DomainError, FitError, ProjectionError, ResolutionError,
                     SchemaError, StagnationError)
from .experiments import (SWEEP_COLUMNS, lebesgue_sweep, lower_bound_instance, lower_bound_run,
                          random_sparse_target, scaling_fit)
from .orlicz import YoungFunction
from .serialize import (SCHEMA_VERSION, dumps, parse_profile, parse_table, profile_document,
                        table_text, trace_document, write_atomic)
from .wcga import WcgaConfig, run_wcga

__all__ = ["RunConfig", "UsageError", "COMMANDS", "parse_config", "execute", "main"]

COMMANDS = ("run-wcga", "estimate-properties", "lebesgue-sweep", "lower-bound", "fit")
SEED_LIMIT = 2 ** 64


class UsageError(Exception):
    """Invalid configuration; reported with exit code 2."""


@dataclass
class RunConfig:
    """Validated settings of one CLI invocation."""

    command: str
    p: float
    alpha: float
    c: float | None = None
    dictionary: str = "haar"
    width: int = 8
    max_level: int = 5
    max_freq: int = 64
    grid_size: int = 512
    tau: float = 1.0
    lambda1: float = 2.0
    seed: int = 0
    out: str | None = None
    trials: int = 10
    max_iter: int = 1000
    projection_tolerance: float = 1e-9
    stop_threshold: float = 1e-10
    sparsity: int = 8
    complex_targets: bool = False
    n_list: list = field(default_factory=lambda: [2, 4, 8, 16, 32])
    m_list: list = field(default_factory=lambda: [16, 64, 256])
    coarse_atoms: int = 8
    profile: str | None = None
    q_trials: int = 200
    h_trials: int = 8
    k_trials: int = 8
    n_max: int = 1024
    sigma_method: str = "threshold"
    input: str | None = None
    x_col: str = "N"
    y_col: str = "empirical_phi"
    model: str = "power"
    log_exponent: float | None = None
    min_rows: int = 3
    timing: bool = False

    def space(self) -> YoungFunction:
        return YoungFunction(self.p, self.alpha, self.c)

    def wcga_config(self) -> WcgaConfig:
        return WcgaConfig(tau=self.tau, max_iterations=self.max_iter,
                          projection_tolerance=self.projection_tolerance,
                          stop_threshold=self.stop_threshold, timing=self.timing)

    def output_path(self) -> str:
        if self.out is not None:
            return self.out
        ext = ".csv" if self.command == "lebesgue-sweep" else ".json"
        return self.command + ext

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
REQUIRED = ("command", "p", "alpha")
INT_FIELDS = {"width", "max_level", "max_freq", "grid_size", "seed", "trials", "max_iter",
              "sparsity", "coarse_atoms", "q_trials", "h_trials", "k_trials", "n_max", "min_rows"}
FLOAT_FIELDS = {"p", "alpha", "c", "tau", "lambda1", "projection_tolerance", "stop_threshold",
                "log_exponent"}
BOOL_FIELDS = {"complex_targets", "timing"}
STR_FIELDS = {"command", "dictionary", "out", "profile", "sigma_method", "input", "x_col", "y_col", "model"}
LIST_FIELDS = {"n_list", "m_list"}

# flag name -> config key
FLAGS = {"command": "command", "p": "p", "alpha": "alpha", "tau": "tau", "lambda1": "lambda1",
         "grid_size": "grid_size", "seed": "seed", "out": "out", "trials": "trials",
         "max_iter": "max_iter"}


def _coerce(key: str, value):
    if value is None:
        if key in REQUIRED:
            raise UsageError(f"{key}: required field is null")
        if FIELDS[key].default is not None and key not in ("c", "out", "profile", "input", "log_exponent"):
            raise UsageError(f"{key}: must not be null")
        return None
    try:
        if key in BOOL_FIELDS:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if key in INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if key in FLOAT_FIELDS:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if key in STR_FIELDS:
            if not isinstance(value, str):
                raise TypeError
            return value
        if key in LIST_FIELDS:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            out = []
            for v in value:
                if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                    raise TypeError
                out.append(int(v))
            return out
    except (TypeError, ValueError):
        raise UsageError(f"{key}: invalid value {value!r}") from None
    raise UsageError(f"{key}: unknown key")


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def validate(cfg: RunConfig) -> RunConfig:
    """Range checks on every field; raises :class:`UsageError` naming the field."""
    def bad(name, why):
        raise UsageError(f"{name}: {why} (got {getattr(cfg, name)!r})")

    if cfg.command not in COMMANDS:
        bad("command", f"must be one of {', '.join(COMMANDS)}")
    if not (math.isfinite(cfg.p) and cfg.p > 1):
        bad("p", "must be a finite number > 1")
    if not math.isfinite(cfg.alpha):
        bad("alpha", "must be finite")
    if cfg.c is not None and not (math.isfinite(cfg.c) and cfg.c >= math.e):
        bad("c", "must be >= e")
    if cfg.dictionary not in ("haar", "trig"):
        bad("dictionary", "must be 'haar' or 'trig'")
    if not _is_pow2(cfg.width):
        bad("width", "must be a power of two")
    if cfg.max_level < 0:
        bad("max_level", "must be >= 0")
    if cfg.max_freq < 1:
        bad("max_freq", "must be >= 1")
    if not (_is_pow2(cfg.grid_size) and cfg.grid_size >= 2):
        bad("grid_size", "must be a power of two >= 2")
    if not (0.0 < cfg.tau <= 1.0):
        bad("tau", "must lie in (0, 1]")
    if not (math.isfinite(cfg.lambda1) and cfg.lambda1 > 1):
        bad("lambda1", "must be > 1")
    if not (0 <= cfg.seed < SEED_LIMIT):
        bad("seed", "must be a 64-bit unsigned integer")
    for name in ("trials", "max_iter", "sparsity", "coarse_atoms", "q_trials", "h_trials",
                 "k_trials", "n_max", "min_rows"):
        if getattr(cfg, name) < 1:
            bad(name, "must be >= 1")
    for name in ("projection_tolerance", "stop_threshold"):
        value = getattr(cfg, name)
        if not (math.isfinite(value) and 0 < value < 1):
            bad(name, "must lie in (0, 1)")
    if not cfg.n_list or any(n < 1 for n in cfg.n_list):
        bad("n_list", "must be a nonempty list of positive integers")
    if not cfg.m_list or any(not (_is_pow2(m) and m >= 2) for m in cfg.m_list):
        bad("m_list", "must be a nonempty list of powers of two >= 2")
    if cfg.sigma_method not in ("threshold", "beam", "exhaustive"):
        bad("sigma_method", "must be threshold, beam or exhaustive")
    if cfg.model not in ("power", "power_log"):
        bad("model", "must be power or power_log")
    if cfg.command == "fit" and cfg.input is None:
        bad("input", "the fit command needs an input table")
    if cfg.command == "lower-bound" and cfg.tau != 1.0:
        bad("tau", "the lower-bound run uses tau = 1")
    return cfg


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcgalab",
        description="Weak Chebyshev greedy experiments in Orlicz spaces L^p (log L)^alpha.",
        epilog=("Other keys (dictionary, width, max_level, max_freq, projection_tolerance, "
                "stop_threshold, sparsity, n_list, m_list, coarse_atoms, profile, q_trials, "
                "h_trials, k_trials, n_max, sigma_method, input, x_col, y_col, model, "
                "log_exponent, min_rows, complex_targets, timing) are set in the JSON config "
                "file. Threads: WCGALAB_THREADS (default: all cores)."),
    )
    parser.add_argument("--version", action="version", version=f"wcgalab {__version__}")
    parser.add_argument("--config", metavar="PATH", help="JSON file with configuration keys")
    parser.add_argument("--command", choices=COMMANDS, help="experiment to run (required)")
    parser.add_argument("--p", type=float, help="integrability exponent p > 1 (required)")
    parser.add_argument("--alpha", type=float, help="logarithmic exponent alpha (required)")
    parser.add_argument("--tau", type=float, help="weakness parameter in (0, 1] (default 1)")
    parser.add_argument("--lambda1", type=float, help="budget parameter lambda1 > 1 (default 2)")
    parser.add_argument("--grid-size", dest="grid_size", type=int,
                        help="samples per grid, a power of two (default 512)")
    parser.add_argument("--seed", type=int, help="64-bit seed (default 0)")
    parser.add_argument("--out", metavar="PATH", help="output file (default <command>.json or .csv)")
    parser.add_argument("--trials", type=int, help="targets per row or sample count (default 10)")
    parser.add_argument("--max-iter", dest="max_iter", type=int,
                        help="WCGA iteration cap (default 1000)")
    return parser


def parse_config(argv=None) -> RunConfig:
    """Merge the optional config file with the flags and validate the result."""
    parser = _parser()
    args = parser.parse_args(argv)
    values: dict = {}
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise UsageError(f"config: cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: invalid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config: top level must be an object")
        for key, value in doc.items():
            if key not in FIELDS:
                raise UsageError(f"{key}: unknown key")
            values[key] = _coerce(key, value)
    for flag, key in FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            values[key] = _coerce(key, value)
    for key in REQUIRED:
        if key not in values:
            raise UsageError(f"{key}: missing required field")
    return validate(RunConfig(**values))


# ---------------------------------------------------------------------------
# commands


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _dictionary(cfg: RunConfig):
    space = cfg.space()
    if cfg.dictionary == "haar":
        return build_haar(space, cfg.width, cfg.max_level, cfg.grid_size)
    return build_trig(space, cfg.max_freq, cfg.grid_size)


def _header(cfg: RunConfig, kind: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "config": cfg.to_dict()}


def _run_wcga(cfg: RunConfig) -> str:
    d = _dictionary(cfg)
    rng = np.random.default_rng(cfg.seed)
    element, f = random_sparse_target(d, min(cfg.sparsity, d.size), rng, cfg.complex_targets)
    trace = run_wcga(f, d, cfg.wcga_config(),
                     progress=lambda n, atom, r: _log(f"step {n} atom {atom} residual {r:.6e}"))
    target = {"support": list(element.support),
              "coefficients": [complex(c) if cfg.complex_targets else float(c.real)
                               for c in element.coefficients]}
    extra = {"run_config": cfg.to_dict(), "target": target}
    return dumps(trace_document(trace, d.space, d.describe(), extra))


def _calibrate(cfg: RunConfig, d):
    _log(f"calibrating profile for p={cfg.p} alpha={cfg.alpha}")
    return calibrate_profile(d.space, d, tau=cfg.tau, lambda1=cfg.lambda1, n_max=cfg.n_max,
                             q_trials=cfg.q_trials, h_trials=cfg.h_trials, k_trials=cfg.k_trials,
                             seed=cfg.seed)


def _estimate_properties(cfg: RunConfig) -> str:
    d = _dictionary(cfg)
    profile = _calibrate(cfg, d)
    doc = profile_document(profile)
    doc["run_config"] = cfg.to_dict()
    return dumps(doc)


def _load_profile(cfg: RunConfig, d):
    if cfg.profile is None:
        return _calibrate(cfg, d)
    with open(cfg.profile, encoding="utf-8") as fh:
        profile = parse_profile(fh.read())
    if profile.space != d.space:
        raise UsageError("profile: calibrated for a different space")
    return profile


def _lebesgue_sweep(cfg: RunConfig) -> str:
    d = _dictionary(cfg)
    profile = _load_profile(cfg, d)
    rng = np.random.default_rng(cfg.seed)
    targets, ns = [], []
    for n in cfg.n_list:
        if n > d.size:
            raise UsageError(f"n_list: N = {n} exceeds the dictionary size {d.size}")
        for _ in range(cfg.trials):
            targets.append(random_sparse_target(d, n, rng, cfg.complex_targets)[1])
            ns.append(n)
    _log(f"sweep: {len(targets)} runs")
    rows = lebesgue_sweep(d.space, d, cfg.wcga_config(), targets, ns, profile=profile,
                          sigma_method=cfg.sigma_method, paired=True)
    for i, row in enumerate(rows):
        _log(f"row {i + 1}/{len(rows)} N {row['N']} phi {row['empirical_phi']} flags {row['flags'] or '-'}")
    return table_text(rows, SWEEP_COLUMNS)


def _lower_bound(cfg: RunConfig) -> str:
    space = cfg.space()
    wcfg = cfg.wcga_config()
    runs = []
    for M in cfg.m_list:
        inst = lower_bound_instance(space, cfg.coarse_atoms, M)
        report = lower_bound_run(inst, wcfg)
        _log(f"M {M} iterations {report['iterations']} order_ok {report['order_ok']}")
        report.pop("trace")
        runs.append(report)
    rows = [{"M": r["M"], "iterations": r["iterations"]} for r in runs if r["iterations"]]
    fit = None
    if len(rows) >= 2:
        rep = scaling_fit(rows, "M", "iterations", min_rows=2)
        fit = dataclasses.asdict(rep)
    doc = _header(cfg, "lower_bound")
    doc["runs"] = runs
    doc["fit"] = fit
    return dumps(doc)


def _fit(cfg: RunConfig) -> str:
    with open(cfg.input, encoding="utf-8") as fh:
        table = parse_table(fh.read())
    rows = []
    for row in table:
        x, y = row.get(cfg.x_col), row.get(cfg.y_col)
        if x is None or y is None:
            continue
        rows.append({cfg.x_col: float(x), cfg.y_col: float(y)})
    report = scaling_fit(rows, cfg.x_col, cfg.y_col, cfg.model, cfg.log_exponent, cfg.min_rows)
    doc = _header(cfg, "fit")
    doc["x_col"], doc["y_col"] = cfg.x_col, cfg.y_col
    doc["fit"] = dataclasses.asdict(report)
    doc["skipped_rows"] = len(table) - len(rows)
    return dumps(doc)


DISPATCH = {
    "run-wcga": _run_wcga,
    "estimate-properties": _estimate_properties,
    "lebesgue-sweep": _lebesgue_sweep,
    "lower-bound": _lower_bound,
    "fit": _fit,
}


def execute(cfg: RunConfig) -> int:
    """Run the configured command and write its output; returns the exit code."""
    path = cfg.output_path()
    try:
        text = DISPATCH[cfg.command](cfg)
        write_atomic(path, text)
    except (UsageError, DomainError, ResolutionError) as exc:
        _log(f"usage error: {exc}")
        return 2
    except (ProjectionError, StagnationError, CalibrationError, FitError, SchemaError) as exc:
        _log(f"numerical error: {exc}")
        return 1
    except OSError as exc:
        _log(f"I/O error: {exc}")
        return 1
    _log(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        return 2
    except SystemExit as exc:  # argparse: --help, --version or bad flags
        return int(exc.code) if isinstance(exc.code, int) else 2
    except (DomainError, ResolutionError) as exc:
        _log(f"usage error: {exc}")
        return 2
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
