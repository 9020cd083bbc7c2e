"""Command-line entry point: ``rffkit <command> [flags]``.

Output is plot-ready CSV (to ``--out`` or stdout). Failures print a single
line ``rffkit: error: <kind>: <message>`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

from .errors import RffError
from .experiments import RUNNERS, RunConfig, run_fit
from .model import save

EXIT_RUNTIME = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message, EXIT_USAGE)


def _fail(kind: str, message: str, code: int):
    one_line = " ".join(str(message).split())
    sys.stderr.write(f"rffkit: error: {kind}: {one_line}\n")
    raise SystemExit(code)


def _int_list(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("expected positive integers")
    return values


def _float_list(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _str_list(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


SAMPLERS = ("iid", "qmc", "orf", "leverage")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--kernel", default="se", help="se | matern | cauchy | laplacian")
    common.add_argument("--sigma", type=float, default=1.0)
    common.add_argument("--lengthscale", type=float, default=1.0)
    common.add_argument("--smoothness", type=float, default=1.5, help="Matern smoothness nu")
    common.add_argument("--m", type=int, default=None, help="number of frequencies")
    common.add_argument("--m-list", type=_int_list, default=None)
    common.add_argument("--sampler", choices=SAMPLERS, default="iid")
    common.add_argument("--samplers", type=_str_list, default=("iid",))
    common.add_argument("--lambda", dest="lam", type=float, default=None, help="ridge penalty; omit for k-fold CV")
    common.add_argument("--lev-lambda", type=float, default=1.0, help="ridge parameter of the leverage scores")
    common.add_argument("--cv-folds", type=int, default=5)
    common.add_argument("--n", type=int, default=None, help="number of generated points")
    common.add_argument("--train-frac", type=float, default=0.2)
    common.add_argument("--dim", type=int, default=None, help="input dimension of the approx-error cloud")
    common.add_argument("--repeats", type=int, default=None, help="seeds per sampler in approx-error")
    common.add_argument("--samples", type=int, default=None, help="functions drawn by psd-sample")
    common.add_argument("--grid-points", type=int, default=None)
    common.add_argument("--point-masses", type=_float_list, default=None)
    common.add_argument("--timing", action="store_true", help="add a wall_seconds column (not reproducible)")
    common.add_argument("--input", default=None, help="CSV input for fit/predict")
    common.add_argument("--model", default=None, help="model file for predict")
    common.add_argument("--out", default=None, help="output path (stdout if omitted)")

    parser = _Parser(prog="rffkit", description="Seeded random-Fourier-feature experiments with plot-ready CSV output.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "psd-sample": "random functions from a spectral density",
        "approx-error": "kernel approximation error per sampler and feature count",
        "toy-spatial": "linear vs kernel regression vs kernel ridge on the spatial toy data",
        "bias-variance": "polynomial degree 1/2/5 fits on the simulated epidemic",
        "feature-sweep": "train/test error against the number of features",
        "fit": "train a random-feature kernel ridge model from a CSV",
        "predict": "apply a saved model to a covariate CSV",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _config(args) -> RunConfig:
    bad = [s for s in args.samplers if s not in SAMPLERS]
    if bad:
        _fail("usage", f"unknown sampler(s) {', '.join(bad)}; choose from {', '.join(SAMPLERS)}", EXIT_USAGE)
    return RunConfig(
        command=args.command, seed=args.seed, kernel=args.kernel, sigma=args.sigma,
        lengthscale=args.lengthscale, smoothness=args.smoothness, m=args.m, m_list=args.m_list,
        sampler=args.sampler, samplers=args.samplers, lam=args.lam, lev_lambda=args.lev_lambda,
        cv_folds=args.cv_folds, n=args.n, train_frac=args.train_frac, dim=args.dim,
        repeats=args.repeats, samples=args.samples, grid_points=args.grid_points,
        point_masses=args.point_masses, timing=args.timing, input=args.input, model=args.model,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    try:
        if cfg.command == "fit":
            if not args.out:
                _fail("usage", "fit needs --out for the model file", EXIT_USAGE)
            model, _ = run_fit(cfg)
            save(model, args.out)
            return 0
        report = RUNNERS[cfg.command](cfg)
        if args.out:
            report.write(args.out)
        else:
            sys.stdout.write(report.to_csv())
    except RffError as exc:
        _fail(exc.kind, str(exc), EXIT_RUNTIME)
    except OSError as exc:
        _fail("io", str(exc), EXIT_RUNTIME)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
