"""Command-line entry point: ``hybridmeta <kind> [options]``.

Exit status: 0 on success, 1 when a validation check or sweep point fails,
2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiments import THETA, ExperimentSpec, Kind, Mode, SpecError, Sweep, emit_plotdata, run_experiment
from .metadist import Method
from .model import ConfigError, NetworkConfig, db_to_lin, field_to_si, load_config, replace_path
from .moments import Variant

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

_VARIANTS = {
    "hybrid": Variant.HYBRID,
    "uwave": Variant.UWAVE,
    "mmwave-backhaul": Variant.MMWAVE_BACKHAUL,
    "mixed": Variant.MIXED,
}
_METHODS = {"beta": Method.BETA, "gilpelaez": Method.GIL_PELAEZ}


class UsageError(ValueError):
    pass


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected a comma-separated list of numbers, got {text!r}") from None


def _range(text: str, what: str) -> list[float]:
    """``START:STOP:STEPS`` (inclusive, STEPS points) or a comma list."""
    if ":" not in text:
        return _floats(text, what)
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what}: expected START:STOP:STEPS, got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"{what}: expected START:STOP:STEPS, got {text!r}") from None
    if steps < 1:
        raise UsageError(f"{what}: STEPS must be >= 1")
    return np.linspace(start, stop, steps).tolist()


def parse_sweep(text: str) -> Sweep:
    """``NAME=START:STOP:STEPS`` in file units; ``theta`` is given in dB."""
    name, sep, grid = text.partition("=")
    if not sep or not name:
        raise UsageError(f"--sweep: expected NAME=START:STOP:STEPS, got {text!r}")
    file_vals = _range(grid, "--sweep")
    if name == THETA:
        vals = [db_to_lin(v) for v in file_vals]
    else:
        try:
            replace_path(NetworkConfig(), name, field_to_si(name, file_vals[0]) if file_vals else 0.0)
        except KeyError:
            raise UsageError(f"--sweep: unknown parameter {name!r}") from None
        vals = [field_to_si(name, v) for v in file_vals]
    return Sweep(name, tuple(vals))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridmeta", description="Meta distribution experiments for hybrid networks.")
    p.add_argument("kind", choices=[k.value for k in Kind])
    p.add_argument("--config", metavar="PATH", help="JSON config in file units (defaults apply to missing keys)")
    p.add_argument("--output", metavar="DIR", default="out", help="directory for CSV and manifest (default: out)")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None,
                   help="analytic, mc or both (default: analytic; validate defaults to mc)")
    p.add_argument("--variant", choices=list(_VARIANTS), default="hybrid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--realizations", type=int, default=None,
                   help="Monte Carlo realizations (default 10000; 100000 for validate)")
    p.add_argument("--theta-db", metavar="LIST", help="comma-separated SIR thresholds in dB")
    p.add_argument("--x-grid", metavar="SPEC", help="reliability grid, START:STOP:STEPS or comma list")
    p.add_argument("--sweep", metavar="NAME=START:STOP:STEPS",
                   help="dotted config path in file units, or theta in dB")
    p.add_argument("--method", choices=list(_METHODS), default="beta", help="meta distribution evaluation")
    p.add_argument("--rates-gbps", metavar="LIST", default="1,1,1",
                   help="rate targets (access, backhaul, direct) in Gbps for the rate kind")
    p.add_argument("--workers", type=int, default=1, help="processes for Monte Carlo")
    return p


def _spec_from_args(args) -> ExperimentSpec:
    kind = Kind(args.kind)
    mode = Mode(args.mode) if args.mode else (Mode.MC if kind is Kind.VALIDATE else Mode.ANALYTIC)
    n = args.realizations if args.realizations is not None else (100_000 if kind is Kind.VALIDATE else 10_000)
    if args.seed < 0 or args.seed >= 2 ** 64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    thetas = tuple(db_to_lin(v) for v in _floats(args.theta_db, "--theta-db")) if args.theta_db else ()
    xs = tuple(_range(args.x_grid, "--x-grid")) if args.x_grid else ()
    rates = _floats(args.rates_gbps, "--rates-gbps")
    if len(rates) == 1:
        rates *= 3
    if len(rates) != 3:
        raise UsageError("--rates-gbps: give one value or three (access, backhaul, direct)")
    sweep = parse_sweep(args.sweep) if args.sweep else None
    return ExperimentSpec(kind=kind, sweep=sweep, mode=mode, variant=_VARIANTS[args.variant],
                          output_path=args.output, seed=args.seed, n_realizations=n, thetas=thetas,
                          x_grid=xs, method=_METHODS[args.method], rates=tuple(r * 1e9 for r in rates),
                          workers=args.workers)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else NetworkConfig()
        spec = _spec_from_args(args)
    except (UsageError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    table = run_experiment(spec, cfg)
    try:
        paths = emit_plotdata(table, spec.output_path, cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for line in table.meta.get("lines", []):
        print(line)
    for path in paths:
        print(f"wrote {path}")
    if table.failed:
        errs = [r[-1] for r in table.rows if spec.kind is not Kind.VALIDATE and r[-1]]
        for e in sorted(set(errs)):
            print(f"point failed: {e}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
