"""Command-line entry point: augment, train, bench, eval-auroc, selfcheck.

Exit status: 0 on success (or a converged run), 2 when ``train`` stops at the
epoch cap without reaching the gap threshold, 3 when a self-check suite
fails, and 1 for usage, configuration, parse and I/O errors.

Options can also come from ``--config FILE``, a ``key = value`` file whose
keys are option names (``lambda-over-n`` or ``lambda_over_n``). Flags given
on the command line take precedence.
"""
import argparse
import configparser
import logging
import math
import sys

from . import __version__
from .bench import (AurocProtocol, eval_auroc_protocol, run_bench,
                    summarize_bench, write_auroc_csv, write_bench_csv,
                    write_metrics_csv, write_summary_csv)
from .data import DatasetFile, load, save, spambase_like, standardize, subsample, two_gaussians
from .errors import MixSDCAError
from .kernels import KernelSpec, save_model
from .losses import LossSpec
from .mixup import MixupConfig, augment
from .objectives import Problem
from .solvers import VARIANTS, SolverOptions, TrainBudget, train

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
EXIT_SELFCHECK_FAILED = 3

log = logging.getLogger("mixsdca")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")


def _ints(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")


def _names(text):
    return [t.strip() for t in str(text).split(",") if t.strip()]


# --------------------------------------------------------------------------
# parser


def _add_data_args(p):
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--label-column", type=int, default=0)
    p.add_argument("--delimiter", default=",")


def _add_model_args(p, loss=True):
    if loss:
        p.add_argument("--loss", default="bce",
                       choices=("bce", "smoothed-hinge", "quadratic-hinge"))
    p.add_argument("--gamma-sm", type=float, default=None,
                   help="smoothness parameter (bce ignores it)")
    p.add_argument("--kernel", choices=("rbf", "poly", "linear"), default="rbf")
    p.add_argument("--rbf-width", type=float, default=None,
                   help="default: sqrt(number of features)")
    p.add_argument("--poly-degree", type=int, default=2)
    p.add_argument("--poly-offset", type=float, default=1.0)


def _add_solver_args(p):
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--gap-threshold", type=float, default=1e-5)
    p.add_argument("--snapshot-every", type=int, default=1)
    p.add_argument("--tight-zeta", action="store_true")
    p.add_argument("--grid-scan", choices=("binary", "linear"),
                   default="binary")
    p.add_argument("--grid-size", type=int, default=None)
    p.add_argument("--grid-offset", type=float, default=4.0)
    p.add_argument("--conj-tol", type=float, default=1e-10)
    p.add_argument("--uniform-gamma", action="store_true")
    p.add_argument("--no-gram-cache", action="store_true",
                   help="compute kernel rows on demand")
    p.add_argument("--freeze-clock", action="store_true",
                   help="write 0 for wall-clock columns (byte-stable output)")


def _add_prep_args(p):
    p.add_argument("--subsample", type=int, default=None,
                   help="keep this many base examples (seeded)")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--mixup-count", type=int, default=0,
                   help="append this many mixup examples before training")
    p.add_argument("--data-seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="mixsdca", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser)
    sub.required = True

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="key = value file")
        p.add_argument("--print-config", action="store_true",
                       help="print the effective options and exit")
        return p

    p = command("augment", "append mixup examples to a dataset")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--count", type=int, default=0)
    p.add_argument("--beta-a", type=float, default=1.0)
    p.add_argument("--beta-b", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-format", choices=("csv", "libsvm"), default=None)
    _add_data_args(p)

    p = command("train", "train one solver and write its trace")
    p.add_argument("dataset", help="file path or synthetic:spambase[:n] / "
                   "synthetic:gaussians[:n]")
    p.add_argument("--solver", choices=VARIANTS, default="approx")
    lam = p.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float, default=None)
    lam.add_argument("--lambda-over-n", type=float, default=None,
                     help="lambda as a multiple of 1/n (default 1)")
    p.add_argument("--sgd-eta", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace-out", default=None)
    p.add_argument("--model-out", default=None)
    _add_data_args(p)
    _add_prep_args(p)
    _add_model_args(p)
    _add_solver_args(p)

    p = command("bench", "runtime benchmark over solvers and a lambda grid")
    p.add_argument("dataset")
    p.add_argument("--solvers", type=_names, default=["approx", "decomp",
                                                      "naive"],
                   help="comma list; also approx-tight, decomp-uniform, sgd")
    p.add_argument("--lambda-over-n", type=_floats, default=[1.0, 0.1, 0.01])
    p.add_argument("--seeds", type=_ints, default=[0])
    p.add_argument("--seed", type=int, default=None,
                   help="shorthand for a single seed")
    p.add_argument("--sgd-eta", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--summary-out", default=None)
    _add_data_args(p)
    _add_prep_args(p)
    _add_model_args(p)
    _add_solver_args(p)

    p = command("eval-auroc", "leave-one-out AUROC with and without mixup")
    p.add_argument("dataset")
    p.add_argument("--losses", type=_names,
                   default=["bce", "smoothed-hinge", "quadratic-hinge"])
    p.add_argument("--lambda-over-n", type=_floats, default=[1.0, 0.1, 0.01])
    p.add_argument("--width-factors", type=_floats, default=[0.5, 1.0, 2.0],
                   help="RBF widths as multiples of sqrt(number of features)")
    p.add_argument("--mixup-count", type=int, default=50)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", choices=("naive", "approx", "decomp"),
                   default="approx")
    p.add_argument("--gamma-sm", type=float, default=None)
    p.add_argument("--gap-threshold", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--snapshot-every", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="auroc.csv")
    p.add_argument("--metrics-out", default=None)
    _add_data_args(p)

    p = command("selfcheck", "run the oracle suites")
    p.add_argument("--seed", type=int, default=0)
    return parser


# --------------------------------------------------------------------------
# config files


def _read_config(path):
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}")
    try:
        cp.read_string("[default]\n" + text)
    except configparser.Error as e:
        raise UsageError(f"bad config {path}: {e}")
    out = {}
    for section in cp.sections():
        for k, v in cp.items(section):
            out[k.replace("_", "-")] = v
    return out


def _config_argv(subparser, cfg):
    """Turn config entries into option tokens placed before the real flags."""
    by_flag = {}
    for act in subparser._actions:
        for opt in act.option_strings:
            by_flag[opt.lstrip("-")] = act
    argv = []
    for key, val in cfg.items():
        if key in ("config", "print-config"):
            continue
        act = by_flag.get(key)
        if act is None:
            raise UsageError(f"unknown config key {key!r}")
        flag = "--" + key
        if isinstance(act, argparse._StoreTrueAction):
            if val.strip().lower() in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif val.strip().lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects a boolean")
        else:
            argv += [flag, val]
    return argv


def parse_args(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = parser.parse_args(argv)
    if getattr(ns, "config", None):
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        extra = _config_argv(sub, _read_config(ns.config))
        i = argv.index(ns.command) + 1
        ns = parser.parse_args(argv[:i] + extra + argv[i:])
    return ns


def print_config(ns, out=None):
    out = out or sys.stdout
    for k in sorted(vars(ns)):
        if k in ("print_config", "config"):
            continue
        v = getattr(ns, k)
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        out.write(f"{k.replace('_', '-')} = {v}\n")


# --------------------------------------------------------------------------
# helpers


def _load_dataset(ns, binary=False):
    src = ns.dataset if hasattr(ns, "dataset") else ns.input
    if src.startswith("synthetic:"):
        parts = src.split(":")
        kind = parts[1]
        n = int(parts[2]) if len(parts) > 2 else None
        seed = getattr(ns, "data_seed", 0)
        if kind == "spambase":
            return spambase_like(n or 4601, seed=seed)
        if kind == "gaussians":
            return two_gaussians(n or 24, seed=seed)
        raise UsageError(f"unknown synthetic dataset {kind!r}")
    return load(DatasetFile(src, ns.format, ns.label_column, ns.delimiter,
                            binary=binary))


def _prepare(ns, ds):
    if ns.subsample:
        ds = subsample(ds, ns.subsample, seed=ns.data_seed)
    if ns.standardize:
        ds, _ = standardize(ds)
    if ns.mixup_count:
        ds = augment(ds, MixupConfig(ns.mixup_count, seed=ns.data_seed))
    return ds


def _loss(ns, name=None):
    name = name or ns.loss
    gamma = ns.gamma_sm if name != "bce" else None
    return LossSpec.from_name(name, gamma)


def _kernel(ns, dim):
    if ns.kernel == "rbf":
        return KernelSpec.rbf(ns.rbf_width or math.sqrt(dim))
    if ns.kernel == "poly":
        return KernelSpec.polynomial(ns.poly_degree, ns.poly_offset)
    return KernelSpec.linear()


def _options(ns):
    return SolverOptions(
        conj_tol=ns.conj_tol,
        tight_zeta=ns.tight_zeta,
        grid_scan=ns.grid_scan,
        grid_size=ns.grid_size,
        grid_offset=ns.grid_offset,
        uniform_gamma=ns.uniform_gamma,
        sgd_eta=getattr(ns, "sgd_eta", None),
    )


def _budget(ns):
    return TrainBudget(ns.epochs, ns.gap_threshold, ns.snapshot_every)


# --------------------------------------------------------------------------
# commands


def cmd_augment(ns):
    if ns.count < 0:
        raise UsageError("--count must be >= 0")
    ds = _load_dataset(ns)
    out = augment(ds, MixupConfig(ns.count, ns.beta_a, ns.beta_b, ns.seed))
    save(out, ns.output, ns.out_format or ns.format, ns.delimiter)
    y = out.labels
    print(f"n_before={len(ds)} n_after={len(out)} "
          f"label_range=[{y.min():g}, {y.max():g}]")
    return EXIT_OK


def cmd_train(ns):
    if (ns.solver == "sgd") != (ns.sgd_eta is not None):
        raise UsageError("--sgd-eta is required for sgd and only for sgd")
    ds = _prepare(ns, _load_dataset(ns))
    n = len(ds)
    lam = ns.lam if ns.lam is not None else (ns.lambda_over_n or 1.0) / n
    p = Problem(ds, _loss(ns), _kernel(ns, ds.dim), lam,
                gram_cache=not ns.no_gram_cache)
    model, trace = train(p, ns.solver, _budget(ns), seed=ns.seed,
                         options=_options(ns))
    if ns.trace_out:
        trace.to_csv(ns.trace_out, freeze_clock=ns.freeze_clock)
    if ns.model_out:
        save_model(model, ns.model_out)
    fin = trace.final
    t = 0.0 if ns.freeze_clock else fin.wall_seconds
    print(f"solver={ns.solver} n={n} lambda={lam!r} status={trace.status} "
          f"epochs={fin.epoch} gap={fin.gap:.3e} seconds={t:.3f}")
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def cmd_bench(ns):
    if not ns.solvers or not ns.lambda_over_n:
        raise UsageError("bench needs at least one solver and one lambda")
    ds = _prepare(ns, _load_dataset(ns))
    seeds = [ns.seed] if ns.seed is not None else ns.seeds
    rows = run_bench(ds, ns.solvers, ns.lambda_over_n, loss=_loss(ns),
                     kernel=_kernel(ns, ds.dim), budget=_budget(ns),
                     seeds=seeds, options=_options(ns), jobs=ns.jobs,
                     gram_cache=not ns.no_gram_cache)
    write_bench_csv(rows, ns.out, freeze_clock=ns.freeze_clock)
    summary = summarize_bench(rows)
    if ns.summary_out:
        write_summary_csv(summary, ns.summary_out,
                          freeze_clock=ns.freeze_clock)
    for s in summary:
        best = ("N/A" if s["best_seconds"] is None
                else f"{s['best_seconds']:.3f}s")
        total = ("N/A" if s["total_seconds"] is None
                 else f"{s['total_seconds']:.3f}s")
        if ns.freeze_clock:
            best = total = "-"
        print(f"{s['solver']:<15} best={best} total={total} "
              f"converged={s['converged_lambdas']}/{s['lambdas']}")
    return EXIT_OK


def cmd_eval_auroc(ns):
    ds = _load_dataset(ns, binary=True)
    proto = AurocProtocol(
        losses=tuple(ns.losses),
        lambdas_over_n=tuple(ns.lambda_over_n),
        width_factors=tuple(ns.width_factors),
        mixup_count=ns.mixup_count,
        trials=ns.trials,
        seed=ns.seed,
        solver=ns.solver,
        gap_threshold=ns.gap_threshold,
        epochs=ns.epochs,
        snapshot_every=ns.snapshot_every,
        gamma_sm=ns.gamma_sm,
    )
    for name in proto.losses:
        LossSpec.from_name(name, ns.gamma_sm if name != "bce" else None)
    res = eval_auroc_protocol(ds, proto, jobs=ns.jobs)
    write_auroc_csv(res, ns.out)
    if ns.metrics_out:
        write_metrics_csv(res, ns.metrics_out)
    for loss, c, m in res.table:
        print(f"{loss:<16} classical={c:.4f} mixup={m:.4f}")
    return EXIT_OK


def cmd_selfcheck(ns):
    from .selfcheck import run_all

    results = run_all(seed=ns.seed)
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"selfcheck failed: {failed[0].name}", file=sys.stderr)
        return EXIT_SELFCHECK_FAILED
    print("selfcheck passed")
    return EXIT_OK


COMMANDS = {
    "augment": cmd_augment,
    "train": cmd_train,
    "bench": cmd_bench,
    "eval-auroc": cmd_eval_auroc,
    "selfcheck": cmd_selfcheck,
}


def main(argv=None):
    try:
        ns = parse_args(argv)
    except UsageError as e:
        print(f"mixsdca: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as e:
        # argparse exits on --help, --version and usage errors
        return e.code if isinstance(e.code, int) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if ns.print_config:
        print_config(ns)
        return EXIT_OK
    try:
        return COMMANDS[ns.command](ns)
    except (UsageError, MixSDCAError, ValueError, OSError) as e:
        print(f"mixsdca {ns.command}: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
