"""Command-line interface: transform, simulate, fit, infer, scan.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import sys

import numpy as np
import pandas as pd

from .estimate import aic_scan, fit_iterative, fit_multistage, fit_with_regimes
from .exceptions import (
    ConvergenceError,
    DegeneracyError,
    InfeasibleModelError,
    InsufficientDataError,
    MCSwitchError,
    ParameterDomainError,
    ShapeError,
)
from .fbinfer import UpdateConfig, date_regimes, forward_backward
from .io import (
    DataFileError,
    load_model,
    model_to_dict,
    read_regimes,
    read_series,
    save_model,
    transform_series,
    write_regimes,
    write_series,
)
from .simulate import sample_series

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_range(text):
    """Parse ``"1,3"`` or ``"0-2"`` (inclusive) into a list of ints."""
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid integer range {text!r}") from exc
    if not out:
        raise argparse.ArgumentTypeError("empty range")
    return out


def build_parser():
    p = _Parser(prog="mcswitch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("transform", help="difference (log) levels")
    t.add_argument("--input", required=True)
    t.add_argument("--output", required=True)
    t.add_argument("--mode", default="diff-log", choices=["diff-log", "diff"])

    s = sub.add_parser("simulate", help="simulate from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--length", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--regimes", help="also write regimes to this file")

    f = sub.add_parser("fit", help="estimate a model")
    f.add_argument("--input", required=True)
    f.add_argument("--output", required=True, help="model file to write")
    f.add_argument("--report", help="fit report (JSON) to write")
    f.add_argument("--regimes", help="regime file (1-based labels)")
    f.add_argument("--num-regimes", type=int, default=2)
    f.add_argument("--order", type=int, default=1)
    f.add_argument("--mode", default="external", choices=["external", "multistage", "iterative"])
    f.add_argument("--tau", type=int, default=0)
    f.add_argument("--nu", type=int, default=3)
    f.add_argument("--xi", type=float, default=0.8)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--max-iter", type=int, default=20)
    f.add_argument("--no-switch", action="store_true", help="fix switch correlations at zero")

    i = sub.add_parser("infer", help="regime probabilities and dated regimes")
    i.add_argument("--input", required=True)
    i.add_argument("--model", required=True)
    i.add_argument("--output", required=True)
    i.add_argument("--regimes", help="also write the dated regimes to this file")
    i.add_argument("--tau", type=int, default=0)
    i.add_argument("--nu", type=int, default=3)
    i.add_argument("--xi", type=float, default=0.8)

    c = sub.add_parser("scan", help="AIC over orders and regime counts")
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--order", type=_int_range, default=[0, 1])
    c.add_argument("--num-regimes", type=_int_range, default=[1, 2])
    c.add_argument("--regimes", help="regime file; uses the complete likelihood")
    c.add_argument("--seed", type=int, default=0)
    return p


def _cfg(args):
    try:
        return UpdateConfig(args.tau, args.nu, args.xi)
    except ParameterDomainError as exc:
        raise UsageError(str(exc)) from exc


def _regimes_for(args, embedded, T):
    v = read_regimes(args.regimes) if getattr(args, "regimes", None) else embedded
    if v is not None and v.size != T:
        raise UsageError(f"regime sequence has {v.size} entries but the series has {T} rows")
    return v


def cmd_transform(args):
    x, names, regimes = read_series(args.input)
    out = transform_series(x, names, args.mode)
    write_series(args.output, out, names, None if regimes is None else regimes[1:])


def cmd_simulate(args):
    if args.length < 1:
        raise UsageError("--length must be positive")
    model = load_model(args.model)
    sim = sample_series(model, args.length, seed=args.seed)
    write_series(args.output, sim.x, regimes=sim.v)
    if args.regimes:
        write_regimes(args.regimes, sim.v)


def cmd_fit(args):
    x, _, embedded = read_series(args.input)
    v = _regimes_for(args, embedded, x.shape[0])
    cfg = _cfg(args)
    if args.order < 0 or args.num_regimes < 1:
        raise UsageError("--order must be >= 0 and --num-regimes >= 1")
    fit_switch = not args.no_switch
    if args.mode == "external":
        if v is None:
            raise UsageError("external mode needs regimes (--regimes or a 'regime' column)")
        if v.max() + 1 > args.num_regimes:
            raise UsageError("regime labels exceed --num-regimes")
        report = fit_with_regimes(x, v, args.order, n_regimes=args.num_regimes, fit_switch=fit_switch)
    elif args.mode == "multistage":
        report = fit_multistage(x, args.num_regimes, args.order, fit_switch=fit_switch, seed=args.seed)
    else:
        report = fit_iterative(x, args.num_regimes, args.order, cfg=cfg, max_iter=args.max_iter,
                               seed=args.seed, fit_switch=fit_switch)
    save_model(args.output, report.model)
    if args.report:
        doc = {
            "mode": report.mode,
            "loglik": report.loglik,
            "n_params": report.n_params,
            "aic": report.aic,
            "iterations": report.n_iter,
            "converged": report.converged,
            "stages": {k: {"start": s.start, "value": s.value, "converged": s.converged}
                       for k, s in report.stages.items()},
            "flags": report.flags,
            "model": model_to_dict(report.model),
        }
        with open(args.report, "w") as fh:
            json.dump(doc, fh, indent=2, default=float)
            fh.write("\n")


def cmd_infer(args):
    x, _, _ = read_series(args.input)
    model = load_model(args.model)
    if x.shape[1] != model.d:
        raise UsageError(f"series has {x.shape[1]} columns but the model has {model.d} variables")
    cfg = _cfg(args)
    if cfg.tau > model.k:
        raise ParameterDomainError(f"tau must not exceed {model.k} for this model")
    probs = forward_backward(x, model).run_prob(cfg.tau)
    v = date_regimes(probs, cfg)
    frame = pd.DataFrame(probs, columns=[f"p_regime_{g + 1}" for g in range(model.G)])
    frame["dated_regime"] = v + 1
    frame.to_csv(args.output, index=False, float_format="%.17g")
    if args.regimes:
        write_regimes(args.regimes, v)


def cmd_scan(args):
    x, _, embedded = read_series(args.input)
    v = _regimes_for(args, embedded, x.shape[0])
    rows = aic_scan(x, args.order, args.num_regimes, v=v, seed=args.seed)
    frame = pd.DataFrame(rows, columns=["G", "order", "aic", "loglik", "n_params", "status"])
    frame.to_csv(args.output, index=False, float_format="%.17g")


COMMANDS = {
    "transform": cmd_transform,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "infer": cmd_infer,
    "scan": cmd_scan,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleModelError, DegeneracyError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFileError, InsufficientDataError, ShapeError, ParameterDomainError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MCSwitchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
