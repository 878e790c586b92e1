"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

beta is accepted as a decimal (``1``, ``0.5``) or as an exact ratio ``q/r``
(``2/3``). Expected-F prediction uses the quadratic algorithm whenever
beta^2 is a ratio with denominator <= 100, which is always the case for the
``q/r`` form and for decimals such as 0.5 or 1.5; any other decimal falls
back to the cubic algorithm.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import bounds, eum, gauss_sim
from .data import DataError, read_dense, read_label_column, read_sparse, sniff_format, write_predictions
from .features import feature_dim
from .metrics import EmptyConvention, evaluate_binary, macro_f, parse_beta
from .poisson_binomial import DeflationUnstable

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

log = logging.getLogger("fmeasure")


class UsageError(ValueError):
    pass


def _beta(text: str):
    try:
        return parse_beta(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _nonneg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


def _conv(text: str) -> EmptyConvention:
    try:
        return EmptyConvention.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _load_training(args) -> tuple[np.ndarray, np.ndarray]:
    fmt = args.format if args.format != "auto" else sniff_format(args.data)
    if fmt == "dense":
        d = read_dense(args.data)
        return d.X, d.y
    if args.label_index is None:
        raise UsageError("--label-index is required to train on a sparse multilabel file")
    d = read_sparse(args.data, args.dim)
    return d.X, d.binary_labels(args.label_index)


def cmd_train(args) -> int:
    X, y = _load_training(args)
    opts = eum.TrainOptions(max_iter=args.max_iter, tol=args.tol)
    fitted = eum.fit_method(args.method, X, y, args.beta, args.lam, opts, feature_map=args.map,
                            conv=args.convention, fixed_half_threshold=args.fixed_half)
    eum.save_model(fitted, args.out)
    log.info("wrote %s", args.out)
    return 0


def cmd_predict(args) -> int:
    try:
        fitted = eum.load_model(args.model)
    except OSError as exc:
        raise DataError(f"cannot read model {args.model}: {exc.strerror}") from None
    except ValueError as exc:
        raise DataError(f"bad model file {args.model}: {exc}") from None
    fmt = args.format if args.format != "auto" else sniff_format(args.data)
    if fmt == "dense":
        X = read_dense(args.data, require_label=False).X
    else:
        X = read_sparse(args.data, args.dim).X
    expected = fitted.model.weights.size
    if feature_dim(fitted.feature_map, X.shape[1]) != expected:
        raise DataError(f"data has {X.shape[1]} features; model with map {fitted.feature_map} "
                        f"expects {expected} weights")
    probs = eum.method_probabilities(fitted, X)
    preds = eum.apply_method(fitted, X)
    out = _open_out(args.out)
    try:
        write_predictions(probs, preds, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _read_label_file(path, kind):
    fmt = sniff_format(path)
    if fmt == "sparse":
        return "sparse", read_sparse(path)
    columns = ("prediction", "label") if kind == "pred" else ("label", "prediction")
    return "binary", read_label_column(path, columns)


def cmd_eval(args) -> int:
    pk, pred = _read_label_file(args.pred, "pred")
    gk, gold = _read_label_file(args.gold, "gold")
    beta = float(args.beta)
    if pk == "binary" and gk == "binary":
        if pred.size != gold.size:
            raise DataError(f"{pred.size} predictions vs {gold.size} gold labels")
        ev = evaluate_binary(pred, gold, beta, args.convention)
        print(f"n={ev.n} tp={ev.tp} fp={ev.fp} fn={ev.fn} tn={ev.tn}")
        print(f"precision={ev.precision:.6f}")
        print(f"recall={ev.recall:.6f}")
        print(f"f_beta={ev.f:.6f}")
        return 0
    if pk != gk:
        raise DataError("prediction and gold files must both be binary or both multilabel")
    if len(pred.labels) != len(gold.labels):
        raise DataError(f"{len(pred.labels)} predicted instances vs {len(gold.labels)} gold instances")
    ids = sorted(set(pred.label_ids()) | set(gold.label_ids()))
    if not ids:
        raise DataError("no labels occur in either file")
    pairs = [(pred.binary_labels(i), gold.binary_labels(i)) for i in ids]
    if args.per_label:
        for i, (s, y) in zip(ids, pairs):
            ev = evaluate_binary(s, y, beta, args.convention)
            print(f"label={i} precision={ev.precision:.6f} recall={ev.recall:.6f} f_beta={ev.f:.6f}")
    print(f"labels={len(ids)}")
    print(f"macro_f_beta={macro_f(pairs, beta, args.convention):.6f}")
    return 0


def cmd_bounds(args) -> int:
    inp = bounds.BoundInputs(args.n, args.eta, float(args.beta), args.pi1, args.d)
    value = bounds.lemma2_bound(inp) if args.lemma2 else bounds.theorem3_bound(inp)
    print("not-applicable" if value is None else repr(value))
    return 0


def _coerce(field: dataclasses.Field, text: str):
    default = field.default
    if field.name == "conv":
        return EmptyConvention.parse(text)
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"{field.name}: expected a boolean, got {text!r}")
    if isinstance(default, tuple):
        items = [t.strip() for t in text.split(",") if t.strip()]
        if field.name in ("seeds",):
            return tuple(int(t) for t in items)
        if field.name in ("fig1_true_pi1", "fig1_grid"):
            return tuple(float(t) for t in items)
        return tuple(items)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_overrides(pairs: list[str]) -> dict:
    fields = {f.name: f for f in dataclasses.fields(gauss_sim.ExperimentConfig)}
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"--override expects key=value, got {pair!r}")
        if key not in fields or key in ("suite",):
            raise UsageError(f"--override: unknown experiment parameter {key!r}")
        try:
            out[key] = _coerce(fields[key], value.strip())
        except ValueError as exc:
            raise UsageError(f"--override {key}: {exc}") from None
    return out


def cmd_experiment(args) -> int:
    overrides = parse_overrides(args.override or [])
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    try:
        cfg = gauss_sim.default_config(args.suite, **overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid experiment config: {exc}") from None
    rows = gauss_sim.run_experiment(cfg)
    out = _open_out(args.out)
    try:
        gauss_sim.write_csv(rows, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmeasure", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_opts(p):
        p.add_argument("--format", choices=("auto", "dense", "sparse"), default="auto")
        p.add_argument("--dim", type=int, default=None, help="feature dimension for sparse files")

    p = sub.add_parser("train", help="fit ml-delta, f-delta or ml-e and write a model file")
    p.add_argument("--method", required=True, choices=[m.value for m in eum.Method])
    p.add_argument("--data", required=True)
    p.add_argument("--map", default="identity", choices=("r0", "r1", "r2", "identity"))
    p.add_argument("--lambda", dest="lam", type=_nonneg, default=1.0)
    p.add_argument("--beta", type=_beta, default=1.0, help="decimal or q/r")
    p.add_argument("--convention", type=_conv, default=EmptyConvention.ONE_ON_EMPTY,
                   help="F when nothing is predicted and nothing is positive: one or zero")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--label-index", type=int, default=None, help="target label for sparse multilabel data")
    p.add_argument("--fixed-half", action="store_true", help="f-delta: threshold at 0.5 instead of sweeping")
    p.add_argument("--out", required=True)
    data_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a model file to a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    data_opts(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="precision, recall and F_beta (macro over labels for multilabel)")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--beta", type=_beta, default=1.0)
    p.add_argument("--convention", type=_conv, default=EmptyConvention.ONE_ON_EMPTY)
    p.add_argument("--per-label", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", help="sample-size bounds for empirical F_beta")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--lemma2", action="store_true", help="deviation bound for a fixed classifier")
    which.add_argument("--theorem3", action="store_true", help="regret bound for a class of VC dimension d")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--beta", type=_beta, default=1.0)
    p.add_argument("--pi1", type=float, required=True)
    p.add_argument("--d", type=int, default=1)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="run a Gaussian-mixture suite and write CSV")
    p.add_argument("--suite", required=True, choices=gauss_sim.SUITES)
    p.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="experiment parameter, e.g. setting=pi1=0.05, trials=500, feature_maps=r0,r1")
    p.add_argument("--seeds", type=_seeds, default=None, help="comma-separated, e.g. 1,2,3")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"fmeasure: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (eum.TrainingDiverged, DeflationUnstable, FloatingPointError) as exc:
        print(f"fmeasure: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining ValueErrors come from validating user-supplied values
        print(f"fmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
