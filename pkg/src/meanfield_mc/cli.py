"""Command-line entry point: ``meanfield-mc {bias,antithetic,oracle,selftest}``.

Exit status: 0 on success, 1 on a configuration error, 2 when a run diverges
(or a self-test check fails).
"""

from __future__ import annotations

import argparse
import math
import sys

from . import oracles
from .engine import DivergenceError
from .experiments import (
    PARAM_KEYS,
    ConfigError,
    ExperimentAborted,
    build_config,
    emit_tables,
    load_config,
    run_experiment,
    render_text,
)
from .models import ModelError
from .paths import GridError

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2

_EXPERIMENT_FLAGS = [
    ("--model", str, "ou | rotator | polynomial | burgers"),
    ("--runs", int, "independent runs R (default 100000)"),
    ("--particles-start", int, "first particle count N (default 20)"),
    ("--iterations", int, "number of particle counts in the doubling schedule"),
    ("--steps", int, "time steps K"),
    ("--horizon", float, "final time T (default 1)"),
    ("--seed", int, "master seed (default 0)"),
    ("--out", str, "directory for CSV/text tables and metadata.json"),
    ("--mode", str, "bias | antithetic | both"),
    ("--reference-value", float, "external reference when no oracle exists"),
    ("--workers", int, "worker threads (default 1)"),
    ("--chunk-runs", int, "runs per chunk"),
    ("--on-divergence", str, "abort | exclude"),
]


def _key_value(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip().replace("-", "_"), value.strip()


def _add_experiment_parser(sub, name, mode, help_text):
    p = sub.add_parser(name, help=help_text)
    p.set_defaults(default_mode=mode)
    p.add_argument("--config", help="flat key = value file; flags override it")
    for flag, typ, h in _EXPERIMENT_FLAGS:
        p.add_argument(flag, type=typ, default=None, help=h)
    p.add_argument("--observables", default=None, help="comma-separated: x, x2, ind:<c>")
    p.add_argument("--param", action="append", type=_key_value, default=[], metavar="KEY=VALUE",
                   help="model parameter, e.g. gamma=-0.5 (repeatable)")
    p.add_argument("--paper-scale", action="store_true", help="use the full-size run counts (slow)")
    p.add_argument("--quiet", action="store_true", help="do not print tables")


class _Parser(argparse.ArgumentParser):
    # Usage errors are configuration errors, not argparse's default status 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="meanfield-mc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_experiment_parser(sub, "bias", "bias", "particle-bias table over a doubling schedule")
    _add_experiment_parser(sub, "antithetic", "antithetic", "antithetic-variance table")
    o = sub.add_parser("oracle", help="print a reference value (17 significant digits)")
    o.add_argument("name", choices=sorted(ORACLES), help="oracle to evaluate")
    o.add_argument("args", nargs="*", type=_key_value, metavar="KEY=VALUE")
    sub.add_parser("selftest", help="quick consistency checks (about a minute)")
    return parser


def _experiment_values(args) -> dict:
    values = load_config(args.config) if args.config else {}
    for flag, _, _ in _EXPERIMENT_FLAGS:
        key = flag[2:].replace("-", "_")
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if args.observables is not None:
        values["observables"] = tuple(s.strip() for s in args.observables.split(",") if s.strip())
    params = dict(values.get("params", {}))
    for key, value in args.param:
        if key not in PARAM_KEYS:
            raise ConfigError(f"unknown model parameter {key!r}")
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    if params:
        values["params"] = params
    if args.paper_scale:
        values["paper_scale"] = True
    values.setdefault("mode", args.default_mode)
    return values


def _run_experiment_command(args) -> int:
    try:
        cfg = build_config(_experiment_values(args)).resolved()
    except (ConfigError, ModelError, GridError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg)
    except (ExperimentAborted, DivergenceError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    if not args.quiet:
        for name, rows in report.tables.items():
            print(render_text(rows, title=f"{cfg.model} / {name}  (R={cfg.runs}, K={cfg.steps}, seed={cfg.seed})"))
        print(f"wall time {report.metadata['wall_time_s']:.1f} s")
    if cfg.out:
        try:
            for p in emit_tables(report, cfg.out):
                print(f"wrote {p}")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle subcommand

def _ou_defaults():
    return dict(gamma=-0.5, beta=0.8, v2=0.5, x0=1.0)


def _grid_kwargs(kw, steps=50):
    k = int(kw.pop("k", steps))
    t = float(kw.pop("t", 1.0))
    return k, t / k


def _oracle_ou_first(kw):
    p = _ou_defaults() | kw
    k, h = _grid_kwargs(p)
    p.pop("v2")
    return [oracles.ou_discretized_first_moment(k, h, **p)]


def _oracle_ou_second(kw):
    p = _ou_defaults() | {"n": 20} | kw
    k, h = _grid_kwargs(p)
    n = int(p.pop("n"))
    return [oracles.ou_discretized_second_moment(k, h, n, **p)]


def _oracle_ou_exact(kw):
    p = _ou_defaults() | {"t": 1.0} | kw
    t = p.pop("t")
    return list(oracles.ou_exact_moments(t, **p))


def _oracle_ou_bias(kw):
    p = _ou_defaults() | {"n": 20} | kw
    k, h = _grid_kwargs(p)
    n = int(p.pop("n"))
    p.pop("x0")
    return [oracles.ou_particle_bias_second_moment(k, h, n, **p)]


def _oracle_polynomial(kw):
    p = {"gamma": 2.0, "x0": 1.0} | kw
    k, h = _grid_kwargs(p)
    return list(oracles.polynomial_moment_recursion(k, h, **p))


def _oracle_burgers(kw):
    p = {"t": 1.0, "x": 0.5, "upsilon": 0.25} | kw
    return [oracles.burgers_cole_hopf(**p)]


def _oracle_rotator_ode(kw):
    p = {"t": 1.0, "x0": math.pi / 4} | kw
    return [float(oracles.rotator_zero_noise(**p))]


def _oracle_rotator_reference(kw):
    if kw:
        raise ConfigError("rotator-reference takes no parameters")
    return [oracles.ROTATOR_REFERENCE_MEAN]


def _oracle_normal_cdf(kw):
    p = {"x": 0.0} | kw
    return [oracles.std_normal_cdf(p["x"])]


ORACLES = {
    "ou-first": _oracle_ou_first,
    "ou-second": _oracle_ou_second,
    "ou-exact": _oracle_ou_exact,
    "ou-bias": _oracle_ou_bias,
    "polynomial": _oracle_polynomial,
    "burgers": _oracle_burgers,
    "rotator-ode": _oracle_rotator_ode,
    "rotator-reference": _oracle_rotator_reference,
    "normal-cdf": _oracle_normal_cdf,
}


def _run_oracle(args) -> int:
    try:
        kw = {k: float(v) for k, v in args.args}
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        values = ORACLES[args.name](kw)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for v in values:
        print(format(v, ".17g"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest

def _selftest() -> int:
    from . import selftest

    ok = True
    for name, passed, detail in selftest.run_checks():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_DIVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("bias", "antithetic"):
        return _run_experiment_command(args)
    if args.command == "oracle":
        return _run_oracle(args)
    return _selftest()


if __name__ == "__main__":
    sys.exit(main())
