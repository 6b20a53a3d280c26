"""
Experiment sweeps: train SLRM and/or SMPCR on synthetic data over a grid of
(sweep value, seed) cells and write the test errors to CSV.

A sweep is described by a flat ``key = value`` spec (see :func:`parse_spec`).
Keys named like :class:`~sparsemiss.synthetic.SyntheticConfig` or
:class:`~sparsemiss.datamodel.Hyperparams` fields set those fields; a
comma-separated value for a hyperparameter makes it a validation grid, and
every method picks its grid point by hold-out error before being scored on
the test set. Control keys:

``sweep_var``, ``sweep_values``
    The swept field and its values (one result row per value and method).
``methods``
    Any of ``SLRM``, ``SMPCR``.
``seeds``
    Seeds; each seeds both the data and the training randomness of a cell.
``tie_sigma_y``
    If true, ``sigma_y`` follows ``sigma_x``.
``validation_gating``
    SMPCR keeps its best stage-2 pass on the hold-out set (default true).
``workers``
    Worker processes; results do not depend on it.
"""
import csv
import io as _io
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .datamodel import DataError, Hyperparams
from .io import fmt, read_kv
from .slrm import train
from .smpcr import smpcr_stage1, smpcr_train
from .synthetic import SyntheticConfig, generate_synthetic

__all__ = [
    "METHODS",
    "CELL_COLUMNS",
    "RESULT_COLUMNS",
    "ExperimentSpec",
    "ExperimentResult",
    "parse_spec",
    "run_cell",
    "run_experiment",
    "fit_method",
    "hyperparam_grid",
    "choose_d_by_variance",
]

log = logging.getLogger(__name__)

METHODS = ("SLRM", "SMPCR")
CELL_COLUMNS = ("sweep_var", "value", "method", "seed", "mse", "seconds")
RESULT_COLUMNS = ("sweep_var", "value", "method", "n_seeds", "n_failed", "median_mse", "mean_mse")

_CFG_FIELDS = {f.name: f for f in fields(SyntheticConfig)}
_HP_FIELDS = {f.name: f for f in fields(Hyperparams)}
_CONTROL = ("sweep_var", "sweep_values", "methods", "seeds", "tie_sigma_y", "validation_gating", "workers")
# stage 2 of SMPCR never reads these
_SMPCR_IGNORES = ("lambda1", "lambda3", "validation_period")


@dataclass(frozen=True)
class ExperimentSpec:
    sweep_var: str
    sweep_values: tuple
    methods: tuple = METHODS
    seeds: tuple = (0,)
    config: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    tie_sigma_y: bool = False
    validation_gating: bool = True
    workers: int = 1

    def synthetic_config(self, value, seed):
        cfg = dict(self.config)
        if self.sweep_var in _CFG_FIELDS:
            cfg[self.sweep_var] = value
        if self.tie_sigma_y:
            cfg["sigma_y"] = cfg.get("sigma_x", 0.0)
        cfg["seed"] = seed
        return SyntheticConfig(**cfg)

    def grid_for(self, value):
        grid = dict(self.grid)
        if self.sweep_var in _HP_FIELDS:
            grid[self.sweep_var] = (value,)
        return grid


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregate over seeds for one (method, sweep value)."""

    method: str
    sweep_var: str
    value: object
    config: dict
    seeds: tuple
    mses: tuple
    median_mse: float
    mean_mse: float
    seconds: float
    errors: tuple = ()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if any(m < 0 for m in self.mses if not math.isnan(m)):
            raise ValueError("MSE values must be nonnegative")


def _coerce(name, spec_field, value):
    if value is None:
        return None
    kind = type(spec_field.default) if spec_field.default is not None else int
    if kind is bool:
        return bool(value)
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise DataError(f"{name} must be an integer, got {value!r}")
        return value
    if kind is float:
        if not isinstance(value, (int, float)):
            raise DataError(f"{name} must be a number, got {value!r}")
        return float(value)
    return str(value)


def _as_tuple(v):
    return tuple(v) if isinstance(v, list) else (v,)


def parse_spec(source):
    """Build an :class:`ExperimentSpec` from a spec file path or a ``dict``."""
    kv = read_kv(source) if isinstance(source, (str, Path)) else dict(source)
    unknown = set(kv) - set(_CFG_FIELDS) - set(_HP_FIELDS) - set(_CONTROL)
    if unknown:
        raise DataError(f"unknown spec keys: {', '.join(sorted(unknown))}")
    if "sweep_var" not in kv or "sweep_values" not in kv:
        raise DataError("spec needs sweep_var and sweep_values")
    sweep_var = kv["sweep_var"]
    if sweep_var not in _CFG_FIELDS and sweep_var not in _HP_FIELDS:
        raise DataError(f"cannot sweep over {sweep_var!r}")
    if sweep_var == "seed":
        raise DataError("use 'seeds' rather than sweeping over 'seed'")
    target = _CFG_FIELDS.get(sweep_var) or _HP_FIELDS[sweep_var]
    values = tuple(_coerce(sweep_var, target, v) for v in _as_tuple(kv["sweep_values"]))
    methods = tuple(str(m).upper() for m in _as_tuple(kv.get("methods", list(METHODS))))
    bad = [m for m in methods if m not in METHODS]
    if bad or len(set(methods)) != len(methods):
        raise DataError(f"methods must be distinct values among {METHODS}, got {methods}")
    seeds = tuple(_coerce("seeds", _CFG_FIELDS["seed"], s) for s in _as_tuple(kv.get("seeds", 0)))
    config = {}
    for name, f in _CFG_FIELDS.items():
        if name in kv and name != "seed":
            if isinstance(kv[name], list):
                raise DataError(f"{name} takes a single value; use sweep_var to vary it")
            config[name] = _coerce(name, f, kv[name])
    grid = {}
    for name, f in _HP_FIELDS.items():
        if name in kv and name != "seed":
            grid[name] = tuple(_coerce(name, f, v) for v in _as_tuple(kv[name]))
    workers = int(kv.get("workers", 1))
    if workers < 1:
        raise DataError("workers must be positive")
    spec = ExperimentSpec(
        sweep_var=sweep_var,
        sweep_values=values,
        methods=methods,
        seeds=seeds,
        config=config,
        grid=grid,
        tie_sigma_y=bool(kv.get("tie_sigma_y", False)),
        validation_gating=bool(kv.get("validation_gating", True)),
        workers=workers,
    )
    # surface invalid configurations before any work starts
    try:
        for v in values:
            spec.synthetic_config(v, seeds[0])
            hyperparam_grid(spec.grid_for(v), "SLRM", 0)
    except ValueError as exc:
        raise DataError(f"invalid spec: {exc}") from None
    return spec


def hyperparam_grid(grid, method, seed):
    """Expand ``{name: values}`` into a list of :class:`Hyperparams`.

    Order follows the ``Hyperparams`` field order, then the listed values.
    Duplicates (after dropping the knobs ``method`` ignores) are removed.
    """
    names = [n for n in _HP_FIELDS if n in grid]
    out, seen = [], set()
    for combo in itertools.product(*(grid[n] for n in names)):
        kw = dict(zip(names, combo))
        if method == "SMPCR":
            for n in _SMPCR_IGNORES:
                kw.pop(n, None)
        hp = Hyperparams(seed=seed, **kw)
        if hp not in seen:
            seen.add(hp)
            out.append(hp)
    return out


def fit_method(method, train_ds, val_ds, d, hps, validation_gating=True):
    """Fit ``method`` at each grid point and keep the lowest hold-out error.

    Ties go to the earlier grid point. Returns ``(model, hp)``.
    """
    best, best_hp = None, None
    stage1_cache = {}
    for hp in hps:
        if method == "SLRM":
            model = train(train_ds, val_ds, d, hp)
            score = model.best_validation_error
        else:
            key = (hp.delta_rls, hp.max_passes, hp.seed)
            if key not in stage1_cache:
                stage1_cache[key] = smpcr_stage1(train_ds, d, hp)
            model = smpcr_train(train_ds, val_ds, d, hp, validation_gating, stage1=stage1_cache[key])
            score = model.best_validation_error if validation_gating else model.mse(val_ds)
        if best is None or score < best[0]:
            best, best_hp = (score, model), hp
    return best[1], best_hp


def run_cell(spec, index, method, seed):
    """Train and test one (sweep value, method, seed) cell.

    Returns a plain dict; a failing cell carries ``error`` and ``mse = nan``.
    """
    value = spec.sweep_values[index]
    t0 = time.perf_counter()
    out = {"index": index, "value": value, "method": method, "seed": seed, "mse": math.nan, "hp": None, "error": ""}
    try:
        cfg = spec.synthetic_config(value, seed)
        train_ds, val_ds, test_ds, _ = generate_synthetic(cfg)
        hps = hyperparam_grid(spec.grid_for(value), method, seed)
        model, hp = fit_method(method, train_ds, val_ds, cfg.d, hps, spec.validation_gating)
        out["mse"] = float(model.mse(test_ds))
        out["hp"] = hp
    except Exception as exc:  # recorded per cell; the sweep carries on
        log.warning("cell %s=%r %s seed=%d failed: %s", spec.sweep_var, value, method, seed, exc)
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["seconds"] = time.perf_counter() - t0
    return out


def _cell_keys(spec):
    return [(i, m, s) for i in range(len(spec.sweep_values)) for m in spec.methods for s in spec.seeds]


def _run_cells(spec, workers):
    keys = _cell_keys(spec)
    if workers <= 1:
        cells = [run_cell(spec, *k) for k in keys]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {k: pool.submit(run_cell, spec, *k) for k in keys}
            cells = [futures[k].result() for k in keys]
    return {(c["index"], c["method"], c["seed"]): c for c in cells}


def _fmt_value(v):
    return fmt(v) if isinstance(v, float) else str(v)


def _csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run_experiment(spec, output_dir=None, workers=None):
    """Run every cell of ``spec`` and aggregate over seeds.

    Parameters
    ----------
    spec : ExperimentSpec, dict or path
    output_dir : path, optional
        If given, writes ``results.csv`` (aggregates; deterministic),
        ``cells.csv`` (long format, one row per cell, with wall time) and
        ``selected.csv`` (chosen hyperparameters and errors per cell).
    workers : int, optional
        Overrides ``spec.workers``.

    Returns
    -------
    list of ExperimentResult
        Ordered by sweep value, then method as listed in the spec.
    """
    if not isinstance(spec, ExperimentSpec):
        spec = parse_spec(spec)
    cells = _run_cells(spec, spec.workers if workers is None else workers)
    results = []
    for i, value in enumerate(spec.sweep_values):
        for method in spec.methods:
            mine = [cells[(i, method, s)] for s in spec.seeds]
            mses = tuple(c["mse"] for c in mine)
            ok = [m for m in mses if not math.isnan(m)]
            results.append(
                ExperimentResult(
                    method=method,
                    sweep_var=spec.sweep_var,
                    value=value,
                    config=spec.synthetic_config(value, spec.seeds[0]).to_dict(),
                    seeds=spec.seeds,
                    mses=mses,
                    median_mse=float(np.median(ok)) if ok else math.nan,
                    mean_mse=float(np.mean(ok)) if ok else math.nan,
                    seconds=sum(c["seconds"] for c in mine),
                    errors=tuple(c["error"] for c in mine if c["error"]),
                )
            )
    if output_dir is not None:
        write_outputs(spec, cells, results, output_dir)
    return results


def write_outputs(spec, cells, results, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        (r.sweep_var, _fmt_value(r.value), r.method, len(r.seeds), len(r.errors), fmt(r.median_mse), fmt(r.mean_mse))
        for r in results
    ]
    (out / "results.csv").write_text(_csv_text(RESULT_COLUMNS, rows))
    keys = _cell_keys(spec)
    rows = [
        (spec.sweep_var, _fmt_value(spec.sweep_values[i]), m, s, fmt(cells[(i, m, s)]["mse"]), "%.6f" % cells[(i, m, s)]["seconds"])
        for i, m, s in keys
    ]
    (out / "cells.csv").write_text(_csv_text(CELL_COLUMNS, rows))
    hp_names = [n for n in _HP_FIELDS if n != "seed"]
    rows = []
    for i, m, s in keys:
        c = cells[(i, m, s)]
        hp = c["hp"]
        rows.append(
            (spec.sweep_var, _fmt_value(spec.sweep_values[i]), m, s)
            + tuple("" if hp is None or getattr(hp, n) is None else _fmt_value(getattr(hp, n)) for n in hp_names)
            + (c["error"],)
        )
    header = ("sweep_var", "value", "method", "seed") + tuple(hp_names) + ("error",)
    (out / "selected.csv").write_text(_csv_text(header, rows))


def choose_d_by_variance(ds, threshold=0.99, max_samples=500):
    """Smallest ``d`` whose leading singular values hold ``threshold`` of the energy.

    Uses the zero-filled first ``max_samples`` samples.
    """
    if len(ds) == 0:
        raise DataError("cannot choose d from an empty dataset")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    if max_samples < 1:
        raise ValueError("max_samples must be positive")
    X = ds.zero_filled[:, :max_samples]
    s = np.linalg.svd(X, compute_uv=False)
    energy = s**2
    total = energy.sum()
    if total == 0:
        raise DataError("all observed values are zero")
    frac = np.cumsum(energy) / total
    # guard the last partial sum against rounding so threshold 1.0 is reachable
    frac[-1] = 1.0
    return int(np.searchsorted(frac, threshold * (1 - 1e-12)) + 1)
