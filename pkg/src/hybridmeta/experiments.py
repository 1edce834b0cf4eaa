"""Experiments: sweep a parameter, evaluate analytic and/or Monte Carlo values.

Tables carry linear SI values only; a manifest written next to the CSVs
names every column's unit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from . import mcsim
from .association import assoc_probs
from .metadist import Method, meta_rate, meta_sir
from .model import NetworkConfig, config_to_dict, db_to_lin, field_unit, replace_path
from .moments import MomentEngine, Variant, network_jitter, rate_thresholds

__all__ = [
    "Kind",
    "Mode",
    "Sweep",
    "ExperimentSpec",
    "SpecError",
    "ResultTable",
    "run_experiment",
    "emit_plotdata",
    "table_columns",
]


class Kind(str, Enum):
    ASSOC = "assoc"
    META = "meta"
    COVERAGE = "coverage"
    DELAY = "delay"
    RATE = "rate"
    VALIDATE = "validate"


class Mode(str, Enum):
    ANALYTIC = "analytic"
    MC = "mc"
    BOTH = "both"


class SpecError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


THETA = "theta"  # pseudo sweep name: device and backhaul thresholds together


@dataclass(frozen=True)
class Sweep:
    """A parameter grid in SI units.  ``name`` is a dotted config path or ``theta``."""

    name: str
    values: tuple[float, ...]

    @property
    def unit(self) -> str:
        return "linear" if self.name == THETA else field_unit(self.name)[1]


@dataclass(frozen=True)
class ExperimentSpec:
    kind: Kind
    sweep: Sweep | None = None
    mode: Mode = Mode.ANALYTIC
    variant: Variant = Variant.HYBRID
    output_path: str | None = None
    seed: int = 0
    n_realizations: int = 10_000
    thetas: tuple[float, ...] = ()
    x_grid: tuple[float, ...] = ()
    method: Method = Method.BETA
    rates: tuple[float, float, float] = (1e9, 1e9, 1e9)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "method", Method(self.method))
        if self.sweep is not None:
            vals = self.sweep.values
            if not vals:
                raise SpecError("sweep", "grid is empty")
            if any(b <= a for a, b in zip(vals[:-1], vals[1:])):
                raise SpecError("sweep", "grid must be strictly increasing")
        if self.mode is not Mode.ANALYTIC and self.n_realizations < 100:
            raise SpecError("realizations", "Monte Carlo needs at least 100 realizations")
        if self.x_grid and (min(self.x_grid) < 0 or max(self.x_grid) > 1):
            raise SpecError("x_grid", "reliabilities must lie in [0, 1]")
        if any(t <= 0 for t in self.thetas):
            raise SpecError("theta", "thresholds must be positive")


@dataclass
class ResultTable:
    kind: Kind
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    units: dict[str, str] = field(default_factory=dict)
    curves: list[tuple[str, str, tuple[str, ...], Callable[[tuple], bool] | None]] = field(default_factory=list)
    failed: bool = False
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


# ------------------------------------------------------------------ defaults

_DEFAULT_SWEEPS = {
    Kind.ASSOC: Sweep("small.density_lambda2", tuple(np.linspace(1, 100, 12) * 1e-6)),
    Kind.COVERAGE: Sweep(THETA, tuple(db_to_lin(float(d)) for d in range(-15, 16))),
    Kind.DELAY: Sweep("small.density_lambda2", tuple(np.linspace(10, 100, 10) * 1e-6)),
    Kind.RATE: Sweep("small.n_antenna_elements", (10.0, 20.0, 40.0, 50.0)),
}
_DEFAULT_THETAS = {Kind.META: (10.0, 1.0, 0.1), Kind.DELAY: (0.1,), Kind.ASSOC: (1.0,)}
_DEFAULT_X = tuple(np.round(np.linspace(0.05, 0.95, 19), 10))

_QUANTITIES = {
    Kind.ASSOC: ("a1", "a2_los", "a2_nlos"),
    Kind.COVERAGE: ("m1", "variance"),
    Kind.DELAY: ("m_minus1", "jitter"),
    Kind.META: ("ccdf",),
    Kind.RATE: ("ccdf",),
}
_LEADING = {
    Kind.ASSOC: ("sweep_value",),
    Kind.COVERAGE: ("sweep_value",),
    Kind.DELAY: ("sweep_value", "theta"),
    Kind.META: ("theta", "x"),
    Kind.RATE: ("sweep_value", "x"),
}


def table_columns(kind: Kind, mode: Mode) -> tuple[str, ...]:
    """Column names, in order, of the table produced for ``kind`` and ``mode``."""
    kind, mode = Kind(kind), Mode(mode)
    if kind is Kind.VALIDATE:
        return ("criterion", "check", "passed", "detail")
    cols = list(_LEADING[kind])
    for q in _QUANTITIES[kind]:
        if mode is not Mode.MC:
            cols.append(f"{q}_analytic")
        if mode is not Mode.ANALYTIC:
            cols += [f"{q}_empirical", f"{q}_stderr"]
        if mode is Mode.BOTH:
            cols.append(f"{q}_absdiff")
    cols.append("error")
    return tuple(cols)


def _apply(cfg: NetworkConfig, sweep: Sweep, value: float) -> tuple[NetworkConfig, float | None]:
    if sweep.name == THETA:
        return cfg, value
    return replace_path(cfg, sweep.name, value), None


def _block(mode: Mode, analytic: float | None, emp: tuple[float, float] | None) -> list:
    out = []
    if mode is not Mode.MC:
        out.append(analytic)
    if mode is not Mode.ANALYTIC:
        out += [emp[0], emp[1]]
    if mode is Mode.BOTH:
        out.append(abs(analytic - emp[0]))
    return out


def _nan_block(mode: Mode) -> list:
    n = {Mode.ANALYTIC: 1, Mode.MC: 2, Mode.BOTH: 4}[mode]
    return [math.nan] * n


# --------------------------------------------------------------- evaluators


def _assoc_point(cfg, spec, idx, theta):
    ap = assoc_probs(cfg)
    ana = (ap.a1, ap.a2_los, ap.a2_nlos)
    emp = [None] * 3
    if spec.mode is not Mode.ANALYTIC:
        s = mcsim.run(cfg, (1.0, 1.0), spec.n_realizations, spec.seed + idx, spec.variant, workers=spec.workers)
        n = len(s)
        freq = s.association_counts() / n
        emp = [(float(f), math.sqrt(f * (1 - f) / n)) for f in freq]
    return [_block(spec.mode, a, e) for a, e in zip(ana, emp)]


def _thetas_for(cfg, theta):
    if theta is None:
        return cfg.thresholds.theta_backhaul, cfg.thresholds.theta_device
    return theta, theta


def _coverage_point(cfg, spec, idx, theta):
    th = _thetas_for(cfg, theta)
    m = np.real(MomentEngine(cfg, *th, variant=spec.variant)(np.array([1.0, 2.0])))
    ana = (float(m[0]), float(m[1] - m[0] ** 2))
    emp = [None, None]
    if spec.mode is not Mode.ANALYTIC:
        s = mcsim.run(cfg, th, spec.n_realizations, spec.seed + idx, spec.variant, workers=spec.workers)
        e1, se1 = mcsim.empirical_moment(s, 1)
        emp = [(e1.real, se1), mcsim.empirical_variance(s)]
    return [_block(spec.mode, a, e) for a, e in zip(ana, emp)]


def _delay_point(cfg, spec, idx, theta):
    th = (theta, theta)
    res = MomentEngine(cfg, *th, variant=spec.variant).result(-1.0)
    m1 = math.inf if res.diverged else float(np.real(res.value))
    jit, _ = network_jitter(th, cfg, spec.variant)
    emp = [None, None]
    if spec.mode is not Mode.ANALYTIC:
        s = mcsim.run(cfg, th, spec.n_realizations, spec.seed + idx, spec.variant, workers=spec.workers)
        e1, se1 = mcsim.empirical_moment(s, -1)
        emp = [(e1.real, se1), mcsim.empirical_variance(1.0 / s.csp)]
    return [_block(spec.mode, a, e) for a, e in zip((m1, jit), emp)]


def _sweep_table(spec: ExperimentSpec, cfg: NetworkConfig, evaluator) -> ResultTable:
    kind = spec.kind
    sweep = spec.sweep or _DEFAULT_SWEEPS[kind]
    cols = table_columns(kind, spec.mode)
    table = ResultTable(kind, cols)
    theta_fixed = (spec.thetas or _DEFAULT_THETAS.get(kind, (None,)))[0]
    for idx, value in enumerate(sweep.values):
        c, theta = _apply(cfg, sweep, value)
        if theta is None:
            theta = theta_fixed
        lead = [value] if kind is not Kind.DELAY else [value, theta]
        try:
            blocks = evaluator(c, spec, idx, theta)
            row = lead + [v for b in blocks for v in b] + [""]
        except Exception as exc:  # keep the remaining points; the error column records the failure
            table.failed = True
            row = lead + [v for _ in _QUANTITIES[kind] for v in _nan_block(spec.mode)] + [f"{type(exc).__name__}: {exc}"]
        table.rows.append(tuple(row))
    table.units = {c: "linear" for c in cols}
    table.units["sweep_value"] = sweep.unit
    table.units["error"] = "text"
    if "theta" in table.units:
        table.units["theta"] = "linear"
    for q in _QUANTITIES[kind]:
        ys = tuple(c for c in cols if c.startswith(q + "_"))
        table.curves.append((q, "sweep_value", ys, None))
    table.meta["sweep"] = sweep.name
    return table


def _meta_like(spec: ExperimentSpec, cfg: NetworkConfig) -> ResultTable:
    kind = spec.kind
    xs = spec.x_grid or _DEFAULT_X
    cols = table_columns(kind, spec.mode)
    table = ResultTable(kind, cols)
    if kind is Kind.META:
        outer = [(t, cfg, (t, t), None) for t in (spec.thetas or _DEFAULT_THETAS[Kind.META])]
    else:
        sweep = spec.sweep or _DEFAULT_SWEEPS[Kind.RATE]
        outer = []
        for v in sweep.values:
            c = replace_path(cfg, sweep.name, v) if sweep.name != THETA else cfg
            outer.append((v, c, None, rate_thresholds(spec.rates, c)))
        table.meta["sweep"] = sweep.name
    for idx, (key, c, th, rth) in enumerate(outer):
        try:
            if spec.mode is not Mode.MC:
                if kind is Kind.META:
                    ana = meta_sir(c, th, xs, spec.method, spec.variant).ccdf
                else:
                    ana = meta_rate(c, spec.rates, xs, spec.method).ccdf
            else:
                ana = [None] * len(xs)
            emp = [None] * len(xs)
            if spec.mode is not Mode.ANALYTIC:
                s = mcsim.run(c, th if th is not None else rth, spec.n_realizations, spec.seed + idx,
                              spec.variant, workers=spec.workers)
                curve = mcsim.empirical_meta(s, xs).ccdf
                n = len(s)
                emp = [(f, math.sqrt(f * (1 - f) / n)) for f in curve]
            for x, a, e in zip(xs, ana, emp):
                table.rows.append(tuple([key, x] + _block(spec.mode, a, e) + [""]))
        except Exception as exc:
            table.failed = True
            for x in xs:
                table.rows.append(tuple([key, x] + _nan_block(spec.mode) + [f"{type(exc).__name__}: {exc}"]))
    lead = cols[0]
    table.units = {c: "probability" for c in cols}
    table.units.update({"x": "probability", "error": "text"})
    table.units[lead] = "linear" if kind is Kind.META else (spec.sweep.unit if spec.sweep else "SI")
    ys = tuple(c for c in cols if c.startswith("ccdf_"))
    for key, *_ in outer:
        table.curves.append((f"{lead}_{key:.6g}", "x", ys, (lambda k: lambda r: r[0] == k)(key)))
    table.meta["method"] = spec.method.value
    if kind is Kind.RATE:
        table.meta["rates_bps"] = list(spec.rates)
    return table


def _validate(spec: ExperimentSpec, cfg: NetworkConfig) -> ResultTable:
    from .acceptance import AcceptanceRunner

    runner = AcceptanceRunner(cfg, mc=spec.mode is not Mode.ANALYTIC, realizations=spec.n_realizations,
                              seed=spec.seed, workers=spec.workers)
    table = ResultTable(Kind.VALIDATE, table_columns(Kind.VALIDATE, spec.mode))
    results = runner.run_all()
    for res in results:
        for chk in res.checks:
            table.rows.append((res.number, chk.name, bool(chk.passed), chk.detail))
    table.failed = not all(r.passed for r in results)
    table.units = {"criterion": "index", "check": "text", "passed": "bool", "detail": "text"}
    table.curves.append(("criteria", "criterion", ("passed",), None))
    table.meta["lines"] = [r.line() for r in results]
    return table


def run_experiment(spec: ExperimentSpec, cfg: NetworkConfig) -> ResultTable:
    """Evaluate the experiment and return its table (``table.failed`` flags per-point or validation failures)."""
    kind = spec.kind
    if kind is Kind.VALIDATE:
        table = _validate(spec, cfg)
    elif kind in (Kind.META, Kind.RATE):
        table = _meta_like(spec, cfg)
    else:
        evaluator = {Kind.ASSOC: _assoc_point, Kind.COVERAGE: _coverage_point, Kind.DELAY: _delay_point}[kind]
        table = _sweep_table(spec, cfg, evaluator)
    table.meta.update({
        "kind": kind.value,
        "mode": spec.mode.value,
        "variant": spec.variant.value,
        "seed": spec.seed,
        "realizations": spec.n_realizations if spec.mode is not Mode.ANALYTIC else 0,
    })
    return table


# ---------------------------------------------------------------- emission


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_cell(v) for v in r])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit_plotdata(table: ResultTable, out_dir: str | Path, cfg: NetworkConfig | None = None,
                  fmt: str = "csv") -> list[Path]:
    """Write the full table, one CSV per curve and ``manifest.json``; returns the written paths.

    Output is byte-identical for identical inputs.
    """
    if fmt != "csv":
        raise ValueError("only the csv format is supported")
    if not table.rows:
        raise ValueError("table is empty; nothing written")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror}") from exc
    kind = table.kind.value
    written = []
    full = out / f"{kind}_table.csv"
    _write_csv(full, table.columns, table.rows)
    written.append(full)
    curves = []
    for name, xcol, ycols, keep in table.curves:
        idx = [table.columns.index(xcol)] + [table.columns.index(c) for c in ycols]
        rows = [tuple(r[i] for i in idx) for r in table.rows if keep is None or keep(r)]
        path = out / f"{kind}_{name}.csv"
        _write_csv(path, (xcol, *ycols), rows)
        written.append(path)
        curves.append({"name": name, "file": path.name, "x": xcol, "y": list(ycols)})
    manifest = {
        "columns": list(table.columns),
        "units": {c: table.units.get(c, "linear") for c in table.columns},
        "curves": curves,
        "table": full.name,
        "failed": bool(table.failed),
        **{k: v for k, v in table.meta.items()},
    }
    if cfg is not None:
        manifest["config_file_units"] = config_to_dict(cfg)
    mpath = out / "manifest.json"
    try:
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_cell) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {mpath}: {exc.strerror}") from exc
    written.append(mpath)
    return written
