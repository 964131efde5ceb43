"""Command-line front end.

Every run prints one JSON document ``{"command", "version", "config",
"result"}`` where ``config`` is the fully resolved configuration, seed
included. ``--output csv-rows`` prints the tabular part of the result as CSV
instead. Exit codes: 0 success, 1 runtime failure, 2 usage or layout error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import sys

import numpy as np

from . import __version__
from ._parallel import set_threads
from .dataset import (
    CsvParseError,
    format_groups,
    gen_data_a,
    gen_data_b,
    gen_planted_subspace_outliers,
    gen_product_pair,
    gen_rotation_pair,
    gen_xor,
    load_csv,
    load_labels,
    write_csv,
)
from .errors import GramdepError, LayoutError
from .gradients import gradcheck
from .grn import (
    evaluate_network,
    load_expressions,
    load_truth,
    normalize_grn_kind,
    ranked_edges,
    score_pairs,
)
from .inference import permutation_test, permutation_test_multi, power_experiment
from .kernel import KernelSpec
from .learning import (
    TrainConfig,
    init_regressor,
    noise_robustness_experiment,
    predict,
    save_checkpoint,
    train,
)
from .measures import measure_from_table, subsampled_measure
from .outliers import detect

__all__ = ["main", "build_parser", "run"]

MEASURE_KINDS = ("ntc", "ndtc", "nmi", "nmi-max", "nmi-min", "tc", "dtc", "mi", "hsic")


class UsageError(Exception):
    """Bad flag value detected after parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _bandwidth(text):
    try:
        return KernelSpec("rbf", text).bandwidth
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _add_kernel(p):
    p.add_argument("--kernel", choices=("rbf", "delta"), default="rbf")
    p.add_argument("--bandwidth", type=_bandwidth, default="median",
                   help="median, silverman or a positive width")


def _add_common(p, seed=True):
    if seed:
        p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--output", choices=("json", "csv-rows"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gramdep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gramdep {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("measure", help="dependence between column groups of a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--groups", default=None, help='layout such as "0-2;3;4,5"')
    p.add_argument("--header", action="store_true")
    p.add_argument("--kind", choices=MEASURE_KINDS, default="ntc")
    p.add_argument("--alpha", type=float, default=2.0)
    _add_kernel(p)
    p.add_argument("--subsample", type=_positive_int, default=None, metavar="K")
    p.add_argument("--groups-count", type=_positive_int, default=10, metavar="M")
    _add_common(p)

    p = sub.add_parser("test", help="permutation independence test")
    p.add_argument("--input", required=True)
    p.add_argument("--groups", default=None)
    p.add_argument("--header", action="store_true")
    p.add_argument("--kind", choices=MEASURE_KINDS, default="nmi")
    p.add_argument("--alpha", type=float, default=2.0)
    _add_kernel(p)
    p.add_argument("--permutations", type=int, default=100)
    p.add_argument("--tau", type=float, default=0.05)
    _add_common(p)

    p = sub.add_parser("power", help="rejection rates over a rotation or sample-size grid")
    p.add_argument("--scenario", choices=("rotation", "product"), required=True)
    p.add_argument("--kind", choices=MEASURE_KINDS, default="nmi")
    p.add_argument("--alpha", type=float, default=2.0)
    _add_kernel(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--permutations", type=int, default=100)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--n", type=_positive_int, default=None, help="rotation sample size (default 512)")
    p.add_argument("--extra-dims", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("grn", help="rank gene pairs and score them against a gold standard")
    p.add_argument("--expressions", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--kind", choices=("nmi", "hsic", "pearson"), default="nmi")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--bandwidth", type=_bandwidth, default="median")
    _add_common(p, seed=False)

    p = sub.add_parser("outlier", help="subspace search plus LOF outlier scores")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--labels", default=None)
    p.add_argument("--kind", choices=("ntc", "ndtc"), default="ntc")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--bandwidth", type=_bandwidth, default="median")
    p.add_argument("--beam", type=_positive_int, default=50)
    p.add_argument("--max-dim", type=int, default=5)
    p.add_argument("--top", type=_positive_int, default=10)
    p.add_argument("--lof-k", type=_positive_int, default=20)
    _add_common(p)

    p = sub.add_parser("train", help="fit a regressor with a residual loss")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--loss", choices=("mse", "mae", "mee", "nmi"), default="nmi")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--epochs", type=_positive_int, default=100)
    p.add_argument("--batch", type=_positive_int, default=32)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--model", choices=("linear", "mlp"), default="linear")
    p.add_argument("--hidden", type=_positive_int, default=32)
    p.add_argument("--bandwidth", type=_bandwidth, default="median", help="residual kernel width")
    p.add_argument("--input-bandwidth", type=_bandwidth, default="silverman")
    p.add_argument("--checkpoint", default="gramdep-model.json")
    _add_common(p)

    p = sub.add_parser("noise-exp", help="test RMSE of each loss relative to MSE under label noise")
    p.add_argument("--noise", choices=("laplace", "shifted-exp", "gaussian"), default="laplace")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--losses", default="mse,mae,mee,nmi")
    p.add_argument("--seeds", type=_positive_int, default=5)
    p.add_argument("--epochs", type=_positive_int, default=150)
    _add_common(p)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--dataset", choices=("rotation", "product", "dataA", "dataB", "xor", "planted-outliers"),
                   required=True)
    p.add_argument("--n", type=_positive_int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--extra-dims", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out", default=None, help="label file for planted-outliers")
    _add_common(p)

    p = sub.add_parser("gradcheck", help="analytic gradients against finite differences")
    p.add_argument("--n", type=_positive_int, default=8)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--fixtures", type=_positive_int, default=20)
    _add_common(p)
    return parser


def _spec(args) -> KernelSpec:
    return KernelSpec(getattr(args, "kernel", "rbf"), args.bandwidth)


def _table(args):
    return load_csv(args.input, args.groups, args.header)


def _cmd_measure(args):
    table = _table(args)
    spec = _spec(args)
    if args.subsample is not None:
        report = subsampled_measure(table, args.kind, args.alpha, spec, args.subsample,
                                    args.groups_count, args.seed)
    else:
        report = measure_from_table(table, args.kind, args.alpha, spec)
    config = {"groups": format_groups(table.groups), "n": table.n}
    return config, report.to_dict()


def _cmd_test(args):
    table = _table(args)
    fn = permutation_test if table.n_groups == 2 else permutation_test_multi
    res = fn(table, args.kind, args.alpha, _spec(args), args.permutations, args.tau, args.seed,
             args.threads)
    return {"groups": format_groups(table.groups), "n": table.n}, res.to_dict()


def _cmd_power(args):
    curve = power_experiment(args.scenario, args.kind, args.alpha, args.trials, args.permutations,
                             args.tau, args.seed, args.n, args.extra_dims, spec=_spec(args),
                             threads=args.threads)
    result = curve.to_dict()
    result["rows"] = curve.rows()
    return {"n": curve.n}, result


def _cmd_grn(args):
    x, names = load_expressions(args.expressions)
    truth = load_truth(args.truth, names)
    kind = normalize_grn_kind(args.kind)
    scores = score_pairs(x, kind, args.alpha, KernelSpec("rbf", args.bandwidth), args.threads)
    result = {"kind": kind, "genes": names, "auc": evaluate_network(scores, truth),
              "rows": ranked_edges(scores, names)}
    return {"n": x.shape[0], "genes": len(names)}, result


def _cmd_outlier(args):
    table = load_csv(args.input, None, args.header)
    labels = load_labels(args.labels) if args.labels else None
    if labels is not None and labels.size != table.n:
        raise LayoutError(f"{args.labels}: {labels.size} labels for {table.n} rows")
    res = detect(table, labels, args.kind, args.alpha, KernelSpec("rbf", args.bandwidth),
                 args.beam, args.max_dim, args.top, args.lof_k, args.seed, args.threads)
    result = res.to_dict()
    result.pop("config")
    result["rows"] = [{"row": i, "score": s} for i, s in enumerate(res.scores)]
    return {"n": table.n, "d": table.d}, result


def _cmd_train(args):
    x = load_csv(args.x, None, args.header).values
    y = load_csv(args.y, None, args.header).values
    if y.shape[1] != 1:
        raise LayoutError(f"{args.y}: expected one target column, got {y.shape[1]}")
    if y.shape[0] != x.shape[0]:
        raise LayoutError(f"{args.x} and {args.y} have different row counts")
    y = y[:, 0]
    cfg = TrainConfig(args.loss, args.alpha, args.batch, args.epochs, args.lr, args.momentum,
                      KernelSpec("rbf", args.bandwidth), args.seed, args.input_bandwidth)
    model = train(x, y, cfg, init_regressor(x.shape[1], args.model, args.hidden, args.seed))
    save_checkpoint(model, args.checkpoint)
    resid = y - predict(model, x)
    result = {"train_rmse": float(np.sqrt(np.mean(resid**2))),
              "train_mae": float(np.mean(np.abs(resid))),
              "output_bias_correction": model.output_bias_correction,
              "checkpoint": str(args.checkpoint)}
    return {"n": x.shape[0], "features": x.shape[1], "train": cfg.describe()}, result


def _cmd_noise_exp(args):
    losses = [s.strip() for s in args.losses.split(",") if s.strip()]
    bad = [s for s in losses if s not in ("mse", "mae", "mee", "nmi")]
    if bad:
        raise UsageError(f"unknown losses {bad}")
    rows = noise_robustness_experiment(args.noise, args.rho, losses, args.seed, args.seeds,
                                       epochs=args.epochs, threads=args.threads)
    return {"losses": losses}, {"rows": rows}


def _cmd_synth(args):
    n = args.n
    labels = None
    if args.dataset == "rotation":
        table = gen_rotation_pair(n or 512, args.theta, args.extra_dims, args.seed)
    elif args.dataset == "product":
        table = gen_product_pair(n or 512, args.seed)
    elif args.dataset == "dataA":
        table = gen_data_a(n or 1000, args.d or 4, args.seed)
    elif args.dataset == "dataB":
        table = gen_data_b(n or 1000, args.d or 4, args.seed)
    elif args.dataset == "xor":
        table = gen_xor(n or 2000, args.seed)
    else:
        table, labels = gen_planted_subspace_outliers(n or 400, args.d or 12, seed=args.seed)
    write_csv(args.out, table.values)
    result = {"path": str(args.out), "n": table.n, "d": table.d, "groups": format_groups(table.groups)}
    if labels is not None and args.labels_out:
        write_csv(args.labels_out, labels.astype(float))
        result["labels_path"] = str(args.labels_out)
    return {"n": table.n, "d": table.d}, result


def _cmd_gradcheck(args):
    errs = gradcheck(args.n, args.alpha, args.seed, args.fixtures)
    return {}, {"max_relative_error": errs, "max": max(errs.values())}


COMMANDS = {
    "measure": _cmd_measure, "test": _cmd_test, "power": _cmd_power, "grn": _cmd_grn,
    "outlier": _cmd_outlier, "train": _cmd_train, "noise-exp": _cmd_noise_exp,
    "synth": _cmd_synth, "gradcheck": _cmd_gradcheck,
}


def _flat(value):
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


def _csv_rows(result) -> str:
    rows = result.get("rows")
    if rows is None:
        rows = [{k: v for k, v in result.items()}]
    buf = io.StringIO()
    fields = list(rows[0].keys()) if rows else []
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _flat(v) for k, v in r.items()})
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@contextlib.contextmanager
def _thread_limit(n):
    # --threads sizes the index-ordered worker pool only. BLAS stays single
    # threaded: a multithreaded BLAS reorders its reductions and would make
    # the low bits depend on the thread count.
    set_threads(n)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        limiter = contextlib.nullcontext()
    else:
        limiter = threadpool_limits(limits=1)
    try:
        with limiter:
            yield
    finally:
        set_threads(1)


def run(argv=None, stdout=None) -> int:
    """Parse ``argv``, run the subcommand, print its document; returns the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "output", "command")}
    try:
        with _thread_limit(args.threads):
            extra, result = COMMANDS[args.command](args)
    except (UsageError, LayoutError, CsvParseError) as exc:
        print(f"gramdep {args.command}: {exc}", file=sys.stderr)
        return 2
    except (GramdepError, ValueError, OSError, RuntimeError) as exc:
        print(f"gramdep {args.command}: error: {exc}", file=sys.stderr)
        return 1
    config.update({f"resolved_{k}": v for k, v in extra.items()})
    if args.output == "csv-rows":
        stdout.write(_csv_rows(result))
    else:
        doc = {"command": args.command, "version": __version__, "config": config, "result": result}
        stdout.write(json.dumps(doc, indent=2, default=_json_default) + "\n")
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
