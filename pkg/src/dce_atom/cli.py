"""Batch front end: read a run configuration, evolve, and write CSV + JSON tables."""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .exceptions import ConfigError, DCEError, NumericalError
from .model import COUPLINGS, ModelParams, build_blocks
from .observables import fidelity, measure
from .operators import coherent_state, fock_state, make_operator_set, product_state
from .oracle import DEFAULT_TOL, FRAMES, evolve_exact, frame_convert
from .propagator import propagator

log = logging.getLogger(__name__)

MODES = ("analytic", "oracle", "compare", "sweep")
SWEEP_AXES = ("epsilon", "g", "eta")
PARAM_KEYS = ("omega0", "epsilon", "eta", "omega_atom", "g")
COLUMNS = (
    "t", "n_mean_analytic", "p_excited_analytic", "n_mean_oracle", "p_excited_oracle",
    "fidelity", "norm_leak_analytic", "norm_leak_oracle",
)
LEAK_WARN = 1e-4

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_WARNING = 0, 1, 2, 3


@dataclass(frozen=True)
class InitialState:
    atom: str = "g"
    field: str = "vacuum"  # "vacuum", "fock:<n>" or "coherent:<re>,<im>"

    def vector(self, cutoff):
        kind, _, arg = self.field.partition(":")
        if kind == "vacuum":
            vec = fock_state(0, cutoff)
        elif kind == "fock":
            vec = fock_state(int(arg), cutoff)
        else:
            re, im = (float(x) for x in arg.split(","))
            vec = coherent_state(complex(re, im), cutoff)
        return product_state(self.atom, vec)


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    cutoff: int
    t_max: float
    samples: int
    mode: str
    coupling: str = "jc"
    frame: str = "interaction"
    initial: InitialState = field(default_factory=InitialState)
    integrator_tol: float = DEFAULT_TOL
    sweep_axes: dict = field(default_factory=dict)
    workers: int = 1

    def to_dict(self):
        out = asdict(self)
        out["sweep_axes"] = {k: list(v) for k, v in self.sweep_axes.items()}
        return out


def _number(value, key, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", key=key)
    if integer and not float(value).is_integer():
        raise ConfigError(f"{key} must be an integer, got {value!r}", key=key)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", key=key)
    return int(value) if integer else float(value)


def _choice(value, options, key):
    if value not in options:
        raise ConfigError(f"{key} must be one of {', '.join(options)}; got {value!r}", key=key)
    return value


def _parse_initial(raw, cutoff):
    if raw is None:
        return InitialState()
    if isinstance(raw, str):
        atom, _, fld = raw.partition(",")
        raw = {"atom": atom.strip(), "field": fld.strip() or "vacuum"}
    if not isinstance(raw, dict):
        raise ConfigError("initial must be a mapping with atom and field", key="initial")
    atom = _choice(raw.get("atom", "g"), ("g", "e"), "initial.atom")
    fld = str(raw.get("field", "vacuum")).strip()
    kind, _, arg = fld.partition(":")
    if kind == "vacuum" and not arg:
        pass
    elif kind == "fock":
        try:
            n = int(arg)
        except ValueError:
            raise ConfigError(f"bad Fock level in {fld!r}", key="initial.field") from None
        if not 0 <= n < cutoff:
            raise ConfigError(f"Fock level {n} must satisfy 0 <= n < cutoff={cutoff}", key="initial.field")
        fld = f"fock:{n}"
    elif kind == "coherent":
        try:
            re, im = (float(x) for x in arg.split(","))
        except ValueError:
            raise ConfigError(f"coherent amplitude must be 're,im', got {arg!r}", key="initial.field") from None
        if re * re + im * im >= cutoff / 4:
            raise ConfigError(f"|alpha|^2 = {re * re + im * im} must be < cutoff/4", key="initial.field")
        fld = f"coherent:{re!r},{im!r}"
    else:
        raise ConfigError(f"unknown field state {fld!r}", key="initial.field")
    return InitialState(atom=atom, field=fld)


def _parse_sweep(raw):
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError("sweep must map axis names to value lists", key="sweep")
    axes = {}
    for axis, values in raw.items():
        _choice(axis, SWEEP_AXES, "sweep")
        key = f"sweep.{axis}"
        if isinstance(values, dict):
            count = _number(values.get("num", 0), f"{key}.num", integer=True)
            if count < 1:
                raise ConfigError(f"{key}.num must be >= 1", key=key)
            values = np.linspace(_number(values.get("start"), f"{key}.start"),
                                 _number(values.get("stop"), f"{key}.stop"), count).tolist()
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{key} must be a non-empty list", key=key)
        axes[axis] = tuple(_number(v, key) for v in values)
    return axes


def parse_config(text) -> RunConfig:
    """Parse a YAML or JSON run configuration and apply defaults."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML/JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = {"params", "cutoff", "t_max", "samples", "mode", "coupling", "frame",
             "initial", "integrator_tol", "sweep", "workers"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}", key=key)
    for key in ("params", "cutoff", "t_max", "samples", "mode"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}", key=key)

    praw = raw["params"]
    if not isinstance(praw, dict):
        raise ConfigError("params must be a mapping", key="params")
    for key in praw:
        if key not in PARAM_KEYS:
            raise ConfigError(f"unknown parameter {key!r}", key=f"params.{key}")
    missing = [k for k in PARAM_KEYS if k not in praw]
    if missing:
        raise ConfigError(f"missing parameter {missing[0]!r}", key=f"params.{missing[0]}")
    try:
        params = ModelParams(**{k: _number(praw[k], f"params.{k}") for k in PARAM_KEYS})
    except ConfigError as exc:
        if exc.key in PARAM_KEYS:
            raise ConfigError(str(exc), key=f"params.{exc.key}") from None
        raise

    cutoff = _number(raw["cutoff"], "cutoff", integer=True)
    if cutoff < 4:
        raise ConfigError("cutoff must be >= 4", key="cutoff")
    t_max = _number(raw["t_max"], "t_max")
    if t_max <= 0:
        raise ConfigError("t_max must be > 0", key="t_max")
    samples = _number(raw["samples"], "samples", integer=True)
    if samples < 2:
        raise ConfigError("samples must be >= 2", key="samples")
    tol = _number(raw.get("integrator_tol", DEFAULT_TOL), "integrator_tol")
    if not 0 < tol < 1:
        raise ConfigError("integrator_tol must be in (0, 1)", key="integrator_tol")
    workers = _number(raw.get("workers", 1), "workers", integer=True)
    if workers < 1:
        raise ConfigError("workers must be >= 1", key="workers")

    cfg = RunConfig(
        params=params,
        cutoff=cutoff,
        t_max=t_max,
        samples=samples,
        mode=_choice(raw["mode"], MODES, "mode"),
        coupling=_choice(raw.get("coupling", "jc"), COUPLINGS, "coupling"),
        frame=_choice(raw.get("frame", "interaction"), FRAMES, "frame"),
        initial=_parse_initial(raw.get("initial"), cutoff),
        integrator_tol=tol,
        sweep_axes=_parse_sweep(raw.get("sweep")),
        workers=workers,
    )
    return validate(cfg)


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.mode == "sweep" and not cfg.sweep_axes:
        raise ConfigError("sweep mode needs at least one sweep axis", key="sweep")
    for axis, values in cfg.sweep_axes.items():
        for v in values:
            try:
                cfg.params.replace(**{axis: v})
            except ConfigError as exc:
                raise ConfigError(str(exc), key=f"sweep.{axis}") from None
    return cfg


@dataclass
class RunResult:
    rows: list
    columns: tuple
    status: int
    warnings: list
    leak_max: dict


def _analytic_states(p, ops, psi0, times, frame):
    blocks = build_blocks(p, ops)
    states = []
    for t in times:
        psi = propagator(t, p, ops, blocks) @ psi0
        if frame == "lab":
            psi = frame_convert(p, psi, t, "to_lab", ops)
        states.append(psi)
    return states


def _oracle_states(p, ops, psi0, times, cfg, frame):
    traj = evolve_exact(p, psi0, times, coupling=cfg.coupling, frame=frame,
                        tol=cfg.integrator_tol, ops=ops)
    return list(traj.states)


def _time_grid(cfg):
    return np.linspace(0.0, cfg.t_max, cfg.samples)


def _row(t, analytic=None, oracle=None):
    row = {"t": t}
    if analytic is not None:
        rec = measure(analytic, t)
        row.update(n_mean_analytic=rec.n_mean, p_excited_analytic=rec.p_excited,
                   norm_leak_analytic=rec.norm_leak)
    if oracle is not None:
        rec = measure(oracle, t)
        row.update(n_mean_oracle=rec.n_mean, p_excited_oracle=rec.p_excited,
                   norm_leak_oracle=rec.norm_leak)
    if analytic is not None and oracle is not None:
        row["fidelity"] = fidelity(analytic, oracle)
    return row


def _sweep_point(cfg, ops, psi0, changes):
    p = cfg.params.replace(**changes)
    times = np.array([0.0, cfg.t_max])
    analytic = _analytic_states(p, ops, psi0, times[-1:], "interaction")[0]
    oracle = _oracle_states(p, ops, psi0, times, cfg, "interaction")[-1]
    row = dict(changes)
    row.update(_row(cfg.t_max, analytic, oracle))
    row["infidelity"] = 1.0 - row["fidelity"]
    return row


def execute(cfg: RunConfig) -> RunResult:
    """Run the configured mode and return the table rows (no file output)."""
    ops = make_operator_set(cfg.cutoff)
    psi0 = cfg.initial.vector(cfg.cutoff)
    columns = COLUMNS
    if cfg.mode == "sweep":
        axes = [a for a in SWEEP_AXES if a in cfg.sweep_axes]
        grid = [dict(zip(axes, combo)) for combo in itertools.product(*(cfg.sweep_axes[a] for a in axes))]
        with ThreadPoolExecutor(max_workers=min(cfg.workers, len(grid))) as pool:
            rows = list(pool.map(lambda ch: _sweep_point(cfg, ops, psi0, ch), grid))
        columns = tuple(axes) + COLUMNS + ("infidelity",)
    else:
        times = _time_grid(cfg)
        analytic = oracle = [None] * len(times)
        if cfg.mode in ("analytic", "compare"):
            frame = "interaction" if cfg.mode == "compare" else cfg.frame
            analytic = _analytic_states(cfg.params, ops, psi0, times, frame)
        if cfg.mode in ("oracle", "compare"):
            frame = "interaction" if cfg.mode == "compare" else cfg.frame
            oracle = _oracle_states(cfg.params, ops, psi0, times, cfg, frame)
        rows = [_row(t, a, o) for t, a, o in zip(times, analytic, oracle)]

    leak_max = {}
    for key in ("norm_leak_analytic", "norm_leak_oracle"):
        vals = [r[key] for r in rows if key in r]
        if vals:
            leak_max[key] = max(vals)
    warnings = []
    for key, value in leak_max.items():
        if value > LEAK_WARN:
            warnings.append(f"{key} reached {value:.3e} > {LEAK_WARN:g}; increase cutoff")
    status = EXIT_WARNING if warnings else EXIT_OK
    return RunResult(rows, columns, status, warnings, leak_max)


def _fmt(value):
    if value is None:
        return ""
    return format(float(value), ".17g")


def write_outputs(cfg: RunConfig, result: RunResult, out_dir, stem="run"):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_fmt(row.get(c)) for c in result.columns])
    meta = {
        "config": cfg.to_dict(),
        "status": result.status,
        "warnings": result.warnings,
        "norm_leak_max": result.leak_max,
        "versions": {
            "dce_atom": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    json_path = out_dir / f"{stem}.json"
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, json_path


def run(cfg: RunConfig, out_dir="."):
    """Execute and write outputs; return the exit status."""
    try:
        result = execute(cfg)
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    write_outputs(cfg, result, out_dir)
    for msg in result.warnings:
        log.warning(msg)
    return result.status


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dce-atom",
        description="Cavity with modulated frequency and a two-level atom: "
                    "closed-form approximate propagator vs. exact integration.",
    )
    parser.add_argument("config", help="YAML or JSON run configuration")
    parser.add_argument("--mode", choices=MODES, help="override the configured mode")
    parser.add_argument("--out-dir", default=".", help="directory for run.csv and run.json")
    parser.add_argument("--quiet", action="store_true", help="only report errors")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
        if args.mode:
            cfg = validate(replace(cfg, mode=args.mode))
    except (ConfigError, OSError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    try:
        status = run(cfg, args.out_dir)
    except DCEError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    if status == EXIT_OK:
        log.info("wrote %s", Path(args.out_dir) / "run.csv")
    return status


if __name__ == "__main__":
    sys.exit(main())
