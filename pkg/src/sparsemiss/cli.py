"""
Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import logging
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .datamodel import DataError, Hyperparams, NumericalError
from .experiment import choose_d_by_variance, fit_method, hyperparam_grid, run_experiment
from .io import fmt, load_dataset, load_model, read_kv, save_dataset, save_model
from .predictor import test_mse
from .slrm import SlrmModel
from .synthetic import SyntheticConfig, generate_synthetic
from .theory import BoundParams, gamma_lower_bound, rademacher_bound, theorem1_rhs

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
FORMATS = ("csv_dense", "sparse_indexed")
SUFFIX = {"csv_dense": ".csv", "sparse_indexed": ".txt"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _kv_overrides(pairs):
    from .io import parse_value

    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        vals = [parse_value(x) for x in v.split(",")] if "," in v else parse_value(v)
        out[k.strip()] = vals
    return out


def _merged_kv(path, pairs):
    kv = read_kv(path) if path else {}
    kv.update(_kv_overrides(pairs))
    return kv


def _pick(kv, cls):
    names = {f.name for f in fields(cls)}
    unknown = set(kv) - names
    if unknown:
        raise UsageError(f"unknown {cls.__name__} keys: {', '.join(sorted(unknown))}")
    return kv


def cmd_gen(args):
    kv = _pick(_merged_kv(args.config, args.set), SyntheticConfig)
    if args.seed is not None:
        kv["seed"] = args.seed
    try:
        cfg = SyntheticConfig(**kv)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synthetic config: {exc}") from None
    train, val, test, truth = generate_synthetic(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = SUFFIX[args.format]
    for name, ds in (("train", train), ("val", val), ("test", test)):
        save_dataset(ds, out / f"{name}{ext}", args.format)
    from .datamodel import SubspaceEstimate

    save_model(SlrmModel(SubspaceEstimate(truth.U), truth.w, 0.0), out / "truth.model", method="truth")
    print(f"wrote {len(train)}/{len(val)}/{len(test)} samples to {out}")


def cmd_train(args):
    kv = _pick(_merged_kv(args.config, args.set), Hyperparams)
    seed = kv.pop("seed", 0) if args.seed is None else args.seed
    grid = {k: tuple(v) if isinstance(v, list) else (v,) for k, v in kv.items()}
    try:
        hps = hyperparam_grid(grid, args.method, seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid hyperparameters: {exc}") from None
    train = load_dataset(args.train, args.format)
    val = load_dataset(args.val, args.format)
    if train.ambient_dim != val.ambient_dim:
        raise DataError("train and validation sets have different dimensions")
    model, hp = fit_method(args.method, train, val, args.d, hps, not args.no_validation_gating)
    save_model(model, args.out, method=args.method)
    print(f"validation_mse = {fmt(model.best_validation_error)}")
    if len(hps) > 1:
        for f in fields(Hyperparams):
            if f.name in grid and len(grid[f.name]) > 1:
                print(f"{f.name} = {getattr(hp, f.name)}")


def cmd_eval(args):
    model = load_model(args.model)
    test = load_dataset(args.test, args.format)
    if test.ambient_dim != model.subspace.ambient_dim:
        raise DataError(f"test set has D={test.ambient_dim}, model expects {model.subspace.ambient_dim}")
    gamma = model.gamma if args.gamma is None else args.gamma
    print(f"mse = {fmt(test_mse(model.subspace, model.weights, gamma, test))}")


def cmd_sweep(args):
    results = run_experiment(args.spec, output_dir=args.out, workers=args.workers)
    for r in results:
        print(f"{r.sweep_var}={r.value} {r.method}: median {r.median_mse:.6g} mean {r.mean_mse:.6g} failed {len(r.errors)}")


def cmd_bound(args):
    kv = _merged_kv(args.config, args.set)
    gamma_keys = {"d", "mu"}
    gamma_args = {k: kv.pop(k) for k in list(kv) if k in gamma_keys}
    out = {}
    if kv:
        _pick(kv, BoundParams)
        try:
            p = BoundParams(**kv)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid bound parameters: {exc}") from None
        out["b"] = p.b
        out["rademacher_bound"] = rademacher_bound(p.n, p.m, p.D, p.R1, p.B_X, p.gamma)
        out["theorem1_rhs"] = theorem1_rhs(p)
    if gamma_args:
        try:
            g = gamma_lower_bound(gamma_args["d"], gamma_args["mu"], kv["m"], kv["delta_prob"])
        except KeyError as exc:
            raise UsageError(f"gamma lower bound needs d, mu, m and delta_prob (missing {exc})") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out["gamma_lower_bound"] = g
        out["inverse_gram_threshold"] = kv["D"] / (kv["m"] * (1 - g)) if "D" in kv and g < 1 else math.nan
    if not out:
        raise UsageError("no parameters given")
    for k, v in out.items():
        print(f"{k} = {fmt(v)}")


def cmd_choose_d(args):
    ds = load_dataset(args.data, args.format)
    print(choose_d_by_variance(ds, args.threshold, args.max_samples))


def build_parser():
    parser = _Parser(prog="sparsemiss", description="Sparse regression with missing features.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def kv_args(p, what):
        p.add_argument("--config", help=f"key = value file of {what} fields")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one field (repeatable)")

    p = sub.add_parser("gen", help="generate a synthetic train/val/test split")
    kv_args(p, "SyntheticConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=FORMATS, default="csv_dense")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="fit SLRM or SMPCR; comma lists in the config form a validation grid")
    p.add_argument("--method", choices=("SLRM", "SMPCR"), type=str.upper, default="SLRM")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--d", type=int, required=True)
    kv_args(p, "Hyperparams")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=FORMATS, default="csv_dense")
    p.add_argument("--no-validation-gating", action="store_true", help="SMPCR: keep the last stage-2 pass")
    p.add_argument("--out", required=True, help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="test MSE of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--format", choices=FORMATS, default="csv_dense")
    p.add_argument("--gamma", type=float, help="override the model's threshold parameter")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run an experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="evaluate the risk bound and the gamma lower bound")
    kv_args(p, "BoundParams (plus d, mu)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("choose-d", help="subspace dimension capturing a share of the variance")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="csv_dense")
    p.add_argument("--threshold", type=float, default=0.99)
    p.add_argument("--max-samples", type=int, default=500)
    p.set_defaults(func=cmd_choose_d)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK
