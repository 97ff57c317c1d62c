"""Particle-doubling experiments: bias and antithetic-variance tables.

For each particle count ``N`` of the schedule ``N_start * 2**i`` the driver
runs ``R`` independent runs (run indices ``0..R-1``).  Run ``r`` draws its
Brownian drivers from the stream ``(seed, r)`` once, at the widest size the
schedule needs, and every ``N`` uses a prefix of that block:

* the bias estimate at ``N`` is the empirical mean of ``psi`` over the
  ``N``-particle system on columns ``0..N-1``;
* the antithetic difference at ``N`` couples the ``2N`` system on columns
  ``0..2N-1`` with the two ``N`` systems on ``0..N-1`` and ``N..2N-1``.

Runs are processed in fixed chunks whose results are merged in ascending
run order, so the output does not depend on the number of workers.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, engine, oracles, paths
from .engine import DivergenceError, Observable
from .models import ModelSpec, ModelError, Variant, generalized_ou, plane_rotator, polynomial_drift, viscous_burgers
from .stats import MomentAccumulator, antithetic_variance, bias_table, precision, ratio_of_decrease


class ConfigError(ValueError):
    pass


class ExperimentAborted(RuntimeError):
    def __init__(self, message, n_particles, run_index):
        super().__init__(message)
        self.n_particles = n_particles
        self.run_index = run_index


_MODEL_FACTORIES = {
    "ou": generalized_ou,
    "rotator": plane_rotator,
    "polynomial": polynomial_drift,
    "burgers": viscous_burgers,
}

# Reproduction settings per model; PAPER_SCALE_RUNS gives the full-size run counts.
MODEL_DEFAULTS = {
    "ou": dict(steps=50, iterations=5, observables=("x", "x2")),
    "rotator": dict(steps=50, iterations=4, observables=("x",)),
    "polynomial": dict(steps=50, iterations=8, observables=("x", "x2")),
    "burgers": dict(steps=500, iterations=5, observables=("ind:0.5",)),
}
PAPER_SCALE_RUNS = {"ou": 5_000_000, "rotator": 490_000_000, "polynomial": 5_000_000, "burgers": 5_000_000}
DESK_RUNS = 100_000
MODES = ("bias", "antithetic", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "ou"
    params: dict = field(default_factory=dict)
    observables: tuple = ()
    horizon: float = 1.0
    steps: int | None = None
    runs: int = DESK_RUNS
    particles_start: int = 20
    iterations: int | None = None
    seed: int = 0
    mode: str = "bias"
    reference_value: float | None = None
    out: str | None = None
    workers: int = 1
    chunk_runs: int | None = None
    on_divergence: str = "abort"

    def resolved(self) -> "ExperimentConfig":
        """Fill model defaults and validate; raises ConfigError."""
        if self.model not in _MODEL_FACTORIES:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(_MODEL_FACTORIES)}")
        defaults = MODEL_DEFAULTS[self.model]
        cfg = replace(
            self,
            steps=self.steps if self.steps is not None else defaults["steps"],
            iterations=self.iterations if self.iterations is not None else defaults["iterations"],
            observables=tuple(self.observables) or defaults["observables"],
        )
        if cfg.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if cfg.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if cfg.particles_start < 2:
            raise ConfigError("particles-start must be >= 2")
        if cfg.runs < 2:
            raise ConfigError("runs must be >= 2")
        if cfg.seed < 0:
            raise ConfigError("seed must be >= 0")
        if cfg.workers < 1:
            raise ConfigError("workers must be >= 1")
        if cfg.on_divergence not in ("abort", "exclude"):
            raise ConfigError("on-divergence must be 'abort' or 'exclude'")
        try:
            cfg.grid()
            cfg.model_spec()
            cfg.observable_objects()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.mode != "antithetic":
            missing = [o.name for o in cfg.observable_objects() if oracle_reference(cfg, o, cfg.particles_start) is None]
            if len(missing) > 1 or (missing and cfg.reference_value is None):
                raise ConfigError(
                    f"no oracle for observable(s) {missing} of model {cfg.model}; "
                    "supply --reference-value (one observable at a time)"
                )
        return cfg

    def model_spec(self) -> ModelSpec:
        try:
            return _MODEL_FACTORIES[self.model](**self.params)
        except TypeError as exc:
            raise ModelError(f"bad parameters for {self.model}: {exc}") from exc

    def grid(self) -> paths.TimeGrid:
        return paths.make_time_grid(self.horizon, self.steps)

    def observable_objects(self) -> list[Observable]:
        return [o if isinstance(o, Observable) else Observable.parse(o) for o in self.observables]

    def schedule(self) -> list[int]:
        return [self.particles_start * 2**i for i in range(self.iterations)]


def oracle_reference(cfg: ExperimentConfig, obs: Observable, n: int) -> float | None:
    """Exact (or shipped) reference for an observable at particle count n, if any."""
    model = cfg.model_spec()
    grid = cfg.grid()
    p = model.params
    if model.variant is Variant.GENERALIZED_OU:
        if obs.kind == "first_moment":
            return oracles.ou_discretized_first_moment(grid.steps, grid.h, p["gamma"], p["beta"], p["x0"])
        if obs.kind == "second_moment":
            return oracles.ou_discretized_second_moment(grid.steps, grid.h, n, p["gamma"], p["beta"], p["v2"], p["x0"])
    elif model.variant is Variant.POLYNOMIAL_DRIFT:
        m1, m2 = oracles.polynomial_moment_recursion(grid.steps, grid.h, p["gamma"], p["x0"])
        if obs.kind == "first_moment":
            return m1
        if obs.kind == "second_moment":
            return m2
    elif model.variant is Variant.VISCOUS_BURGERS:
        if obs.kind == "indicator_above" and p["x0"] == 0.0:
            return oracles.burgers_cole_hopf(grid.horizon, obs.threshold, p["upsilon"])
    elif model.variant is Variant.PLANE_ROTATOR:
        if obs.kind == "first_moment" and model == plane_rotator() and grid == paths.make_time_grid(1.0, 50):
            return oracles.ROTATOR_REFERENCE_MEAN
    return None


def reference_for(cfg: ExperimentConfig, obs: Observable, n: int) -> float:
    ref = oracle_reference(cfg, obs, n)
    if ref is None:
        ref = cfg.reference_value
    if ref is None:
        raise ConfigError(f"no reference for {obs.name}")
    return float(ref)


@dataclass
class ReportRow:
    n: int
    estimate: float | None = None
    reference: float | None = None
    difference: float | None = None
    precision: float | None = None
    ratio_of_decrease: float | None = None
    antithetic_variance: float | None = None
    antithetic_precision: float | None = None
    antithetic_ratio: float | None = None


CSV_COLUMNS = [
    "N", "estimate", "reference", "difference", "precision", "ratio_of_decrease",
    "antithetic_variance", "antithetic_precision", "antithetic_ratio",
]


@dataclass
class Report:
    config: ExperimentConfig
    tables: dict  # observable name -> list[ReportRow]
    metadata: dict


@dataclass
class _ChunkResult:
    estimates: dict  # (n, obs) -> MomentAccumulator
    diffs: dict  # (n, obs) -> ndarray
    excluded: dict  # n -> number of excluded runs


def _process_chunk(cfg, model, grid, observables, schedule, width, start, stop) -> _ChunkResult:
    runs = np.arange(start, stop)
    initial, incr = paths.fill_driver_blocks(cfg.seed, runs, grid, width)
    check = cfg.on_divergence == "abort"
    estimates, diffs, excluded = {}, {}, {}
    for n in schedule:
        try:
            if cfg.mode == "bias":
                means, finite = engine.simulate_single_batch(model, grid, n, initial, incr, observables, check=check)
            else:
                triple = engine.simulate_triple_batch(model, grid, n, initial, incr, observables, check=check)
                means, finite = triple.mean_a, triple.finite
        except DivergenceError as exc:
            raise ExperimentAborted(
                f"divergent run {int(runs[exc.row])} at N={n}", n, int(runs[exc.row])
            ) from exc
        excluded[n] = int((~finite).sum())
        for obs in observables:
            estimates[n, obs.name] = MomentAccumulator().add_array(means[obs.name][finite])
            if cfg.mode != "bias":
                diffs[n, obs.name] = triple.antithetic_diff(obs.name)[finite]
    return _ChunkResult(estimates, diffs, excluded)


def _require_runs(count, n):
    if count < 2:
        raise ExperimentAborted(f"fewer than two finite runs left at N={n}", n, None)


def default_chunk_runs(width: int, steps: int, budget_bytes: float = 64e6) -> int:
    return max(1, int(budget_bytes // (8 * width * (steps + 1))))


def run_experiment(config: ExperimentConfig) -> Report:
    cfg = config.resolved()
    model = cfg.model_spec()
    grid = cfg.grid()
    observables = cfg.observable_objects()
    schedule = cfg.schedule()
    width = max(schedule) * (1 if cfg.mode == "bias" else 2)
    chunk = cfg.chunk_runs or default_chunk_runs(width, grid.steps)
    bounds = [(s, min(s + chunk, cfg.runs)) for s in range(0, cfg.runs, chunk)]

    t0 = time.perf_counter()

    def work(b):
        return _process_chunk(cfg, model, grid, observables, schedule, width, *b)

    if cfg.workers == 1:
        results = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(work, bounds))

    tables = {}
    for obs in observables:
        rows = [ReportRow(n) for n in schedule]
        if cfg.mode != "antithetic":
            accs = []
            for n in schedule:
                acc = MomentAccumulator()
                for res in results:
                    acc = acc.merge(res.estimates[n, obs.name])
                _require_runs(acc.count, n)
                accs.append(acc)
            refs = [reference_for(cfg, obs, n) for n in schedule]
            for row, brow in zip(rows, bias_table(schedule, [a.mean for a in accs], refs, [precision(a) for a in accs])):
                row.estimate, row.reference, row.difference = brow.estimate, brow.reference, brow.difference
                row.precision, row.ratio_of_decrease = brow.precision, brow.ratio_of_decrease
        if cfg.mode != "bias":
            variances = []
            for row, n in zip(rows, schedule):
                d = np.concatenate([res.diffs[n, obs.name] for res in results])
                _require_runs(d.size, n)
                row.antithetic_variance, row.antithetic_precision = antithetic_variance(d)
                variances.append(row.antithetic_variance)
            for row, ratio in zip(rows, ratio_of_decrease(variances)):
                row.antithetic_ratio = ratio
        tables[obs.name] = rows

    metadata = {
        "model": cfg.model,
        "params": model.params,
        "observables": [o.name for o in observables],
        "mode": cfg.mode,
        "seed": cfg.seed,
        "runs": cfg.runs,
        "schedule": schedule,
        "steps": grid.steps,
        "horizon": grid.horizon,
        "driver_width": width,
        "normals_drawn": cfg.runs * width * (grid.steps + 1),
        "chunk_runs": chunk,
        "workers": cfg.workers,
        "excluded_runs": {str(n): sum(r.excluded[n] for r in results) for n in schedule},
        "wall_time_s": time.perf_counter() - t0,
        "version": __version__,
    }
    return Report(cfg, tables, metadata)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    return "" if v is None else format(v, ".17g")


def render_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        vals = [r.estimate, r.reference, r.difference, r.precision, r.ratio_of_decrease,
                r.antithetic_variance, r.antithetic_precision, r.antithetic_ratio]
        lines.append(",".join([str(r.n)] + [_fmt(v) for v in vals]))
    return "\n".join(lines) + "\n"


_TEXT_ROWS = [
    ("Estimate", "estimate"),
    ("Reference", "reference"),
    ("Difference", "difference"),
    ("Precision", "precision"),
    ("Ratio of decrease", "ratio_of_decrease"),
    ("Antithetic variance", "antithetic_variance"),
    ("Precision (variance)", "antithetic_precision"),
    ("Ratio of decrease (variance)", "antithetic_ratio"),
]


def render_text(rows, title: str = "") -> str:
    """Aligned table with one column per particle count."""
    header = ["Nb. particles"] + [str(r.n) for r in rows]
    body = [header]
    for label, attr in _TEXT_ROWS:
        values = [getattr(r, attr) for r in rows]
        if all(v is None for v in values):
            continue
        body.append([label] + ["x" if v is None else _fmt(v) for v in values])
    widths = [max(len(line[i]) for line in body) for i in range(len(header))]
    out = [title] if title else []
    sep = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    out.append(sep)
    for line in body:
        out.append("| " + " | ".join(c.ljust(w) for c, w in zip(line, widths)) + " |")
        out.append(sep)
    return "\n".join(out) + "\n"


def emit_tables(report: Report, out_dir, formats=("csv", "text")) -> list[Path]:
    """Write ``<obs>.csv`` / ``<obs>.txt`` per observable plus ``metadata.json``."""
    if not report.tables:
        raise ValueError("empty report")
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, rows in report.tables.items():
            if "csv" in formats:
                p = out_dir / f"{name}.csv"
                p.write_text(render_csv(rows))
                written.append(p)
            if "text" in formats:
                p = out_dir / f"{name}.txt"
                p.write_text(render_text(rows, title=f"{report.config.model} / {name}"))
                written.append(p)
        p = out_dir / "metadata.json"
        meta = dict(report.metadata)
        meta["config"] = {k: v for k, v in asdict(report.config).items() if k != "observables"}
        p.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
        written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write tables to {out_dir}: {exc.strerror or exc}") from exc
    return written


# ---------------------------------------------------------------------------
# configuration files

_INT_KEYS = {"runs", "particles_start", "iterations", "steps", "seed", "workers", "chunk_runs"}
_FLOAT_KEYS = {"horizon", "reference_value"}
_STR_KEYS = {"model", "mode", "out", "on_divergence"}
PARAM_KEYS = {"gamma", "beta", "v2", "x0", "coupling", "kbt", "init_mean", "init_var", "upsilon"}


def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines (``#`` comments) into config keyword arguments.

    Keys are the command-line flag names; hyphens and underscores are
    interchangeable.  Model parameters go to ``params``; ``observables`` is a
    comma-separated list.
    """
    out: dict = {}
    params: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _STR_KEYS:
                out[key] = value
            elif key == "observables":
                out[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key in PARAM_KEYS:
                params[key] = float(value)
            elif key == "paper_scale":
                out[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    if params:
        out["params"] = params
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text)


def build_config(values: dict) -> ExperimentConfig:
    """Build a config from merged file/flag values, applying ``paper_scale``."""
    values = dict(values)
    paper = values.pop("paper_scale", False)
    model = values.get("model", "ou")
    if paper:
        values.setdefault("runs", PAPER_SCALE_RUNS.get(model, DESK_RUNS))
    return ExperimentConfig(**values)
