"""Runtime benchmark over solvers and lambda grids, and the LOO AUROC protocol."""
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import CVPlan, auroc, cv_folds, standardize
from .kernels import KernelSpec, predict
from .losses import LossSpec
from .mixup import MixupConfig, augment
from .objectives import Problem
from .solvers import SolverOptions, TrainBudget, train

__all__ = [
    "BenchRow",
    "AurocProtocol",
    "run_bench",
    "summarize_bench",
    "write_bench_csv",
    "write_summary_csv",
    "eval_auroc_protocol",
    "write_auroc_csv",
    "write_metrics_csv",
]

BENCH_HEADER = ["solver", "lambda", "seed", "converged", "epochs",
                "wall_seconds", "final_gap"]


@dataclass(frozen=True)
class BenchRow:
    solver: str
    lam: float
    seed: int
    converged: bool
    epochs: int
    wall_seconds: float
    final_gap: float
    lam_over_n: float = math.nan
    snapshot_seconds: float = 0.0


def _solver_options(name, options):
    """``approx-tight`` and ``decomp-uniform`` are shorthands for flag sets."""
    base, _, flavor = name.partition("-")
    opts = dict(options.__dict__)
    if flavor == "tight":
        opts["tight_zeta"] = True
    elif flavor == "uniform":
        opts["uniform_gamma"] = True
    elif flavor:
        raise ValueError(f"unknown solver {name!r}")
    return base, SolverOptions(**opts)


def _bench_job(job):
    ds, loss, kernel, solver, lam_over_n, seed, budget, options, cache = job
    n = len(ds)
    p = Problem(ds, loss, kernel, lam_over_n / n, gram_cache=cache)
    variant, opts = _solver_options(solver, options)
    _, tr = train(p, variant, budget, seed=seed, options=opts)
    fin = tr.final
    return BenchRow(solver, p.lam, seed, tr.converged, fin.epoch,
                    fin.wall_seconds, fin.gap, lam_over_n, tr.snapshot_seconds)


def _pool_map(fn, jobs, n_jobs):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, jobs))


def run_bench(ds, solvers, lambdas_over_n, loss=None, kernel=None,
              budget=None, seeds=(0,), options=None, jobs=1, gram_cache=True):
    """Train every (solver, lambda, seed) combination from scratch.

    ``lambdas_over_n`` are multiples of ``1/n``. Rows come back sorted by
    solver, lambda and seed regardless of ``jobs``. Wall-clock excludes Gram
    construction and includes every snapshot.
    """
    if not solvers or not lambdas_over_n:
        raise ValueError("bench needs at least one solver and one lambda")
    loss = loss or LossSpec.from_name("bce")
    kernel = kernel or KernelSpec.rbf(math.sqrt(ds.dim))
    budget = budget or TrainBudget()
    options = options or SolverOptions()
    work = [(ds, loss, kernel, s, float(c), int(seed), budget, options,
             gram_cache)
            for s in solvers for c in lambdas_over_n for seed in seeds]
    rows = _pool_map(_bench_job, work, jobs)
    return sorted(rows, key=lambda r: (r.solver, -r.lam, r.seed))


def summarize_bench(rows):
    """Per solver: best and total seconds over the lambda grid.

    Seconds at one lambda are averaged over seeds and count only when every
    seed converged. ``best`` is None (N/A) if no lambda converged; ``total``
    is None unless all lambdas converged.
    """
    out = []
    for s in sorted({r.solver for r in rows}):
        mine = [r for r in rows if r.solver == s]
        per_lam = {}
        for lam in sorted({r.lam for r in mine}, reverse=True):
            rs = [r for r in mine if r.lam == lam]
            ok = all(r.converged for r in rs)
            per_lam[lam] = (float(np.mean([r.wall_seconds for r in rs]))
                            if ok else None)
        good = {k: v for k, v in per_lam.items() if v is not None}
        best_lam = min(good, key=good.get) if good else None
        out.append({
            "solver": s,
            "best_lambda": best_lam,
            "best_seconds": good[best_lam] if good else None,
            "total_seconds": (sum(good.values())
                              if len(good) == len(per_lam) else None),
            "converged_lambdas": len(good),
            "lambdas": len(per_lam),
        })
    return out


def _fmt(v, freeze=False):
    if v is None:
        return "N/A"
    if freeze:
        return "0"
    return repr(float(v))


def write_bench_csv(rows, path, freeze_clock=False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in rows:
            w.writerow([r.solver, repr(r.lam), r.seed, int(r.converged),
                        r.epochs, _fmt(r.wall_seconds, freeze_clock),
                        repr(float(r.final_gap))])


def write_summary_csv(summary, path, freeze_clock=False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["solver", "best_lambda", "best_seconds", "total_seconds",
                    "converged_lambdas", "lambdas"])
        for s in summary:
            w.writerow([s["solver"], _fmt(s["best_lambda"]),
                        _fmt(s["best_seconds"], freeze_clock),
                        _fmt(s["total_seconds"], freeze_clock),
                        s["converged_lambdas"], s["lambdas"]])


# --------------------------------------------------------------------------
# AUROC protocol


@dataclass(frozen=True)
class AurocProtocol:
    losses: tuple = ("bce", "smoothed-hinge", "quadratic-hinge")
    lambdas_over_n: tuple = (1.0, 0.1, 0.01)
    width_factors: tuple = (0.5, 1.0, 2.0)
    mixup_count: int = 50
    trials: int = 5
    seed: int = 0
    solver: str = "approx"
    gap_threshold: float = 1e-5
    epochs: int = 5000
    snapshot_every: int = 5
    gamma_sm: float = None


@dataclass
class AurocResult:
    table: list = field(default_factory=list)
    metrics: list = field(default_factory=list)


def _fit_predict(train_ds, test_x, loss, width, lam_over_n, proto, mix_seed):
    """Standardize on the training part, optionally augment, train, score."""
    tr, st = standardize(train_ds)
    if mix_seed is not None and proto.mixup_count > 0:
        tr = augment(tr, MixupConfig(proto.mixup_count, seed=mix_seed))
    p = Problem(tr, loss, KernelSpec.rbf(width), lam_over_n / len(tr))
    model, _ = train(p, proto.solver,
                     TrainBudget(proto.epochs, proto.gap_threshold,
                                 proto.snapshot_every))
    return predict(model, st.transform(test_x))


def _loo_scores(ds, loss, width, lam_over_n, proto, mix_seed):
    scores = np.empty(len(ds))
    for k, (tr, te) in enumerate(cv_folds(len(ds), CVPlan("loo"))):
        seed = None if mix_seed is None else mix_seed + 7919 * k
        scores[te] = _fit_predict(ds.subset(tr), ds.features[te], loss, width,
                                  lam_over_n, proto, seed)
    return scores


def _select(train_ds, loss, proto, mix_seed):
    """Inner LOO: pick (lambda/n, width) maximising pooled held-out AUROC."""
    base_w = math.sqrt(train_ds.dim)
    best, best_auc = None, -1.0
    for c in proto.lambdas_over_n:
        for f in proto.width_factors:
            s = _loo_scores(train_ds, loss, f * base_w, c, proto, mix_seed)
            a = auroc(s, train_ds.labels)
            if a > best_auc:
                best, best_auc = (c, f * base_w), a
    return best


def _outer_job(job):
    ds, loss_name, proto, mixed, trial, fold = job
    loss = LossSpec.from_name(loss_name, proto.gamma_sm)
    tr, te = cv_folds(len(ds), CVPlan("loo"))[fold]
    sub = ds.subset(tr)
    mix_seed = None
    if mixed:
        mix_seed = proto.seed + 1_000_003 * (trial + 1) + 101 * fold
    c, width = _select(sub, loss, proto, mix_seed)
    score = _fit_predict(sub, ds.features[te], loss, width, c, proto, mix_seed)
    return float(score[0])


def eval_auroc_protocol(ds, proto=None, jobs=1):
    """Outer LOO with inner-LOO model selection, with and without mixup.

    Mixup runs ``proto.trials`` times with distinct seeds; the classical run
    has no randomness and is evaluated once. Within every fold the training
    part is standardized first and then augmented. Returns an
    :class:`AurocResult` whose ``table`` rows are ``(loss, classical, mixup)``.
    """
    proto = proto or AurocProtocol()
    if not ds.is_binary:
        raise ValueError("AUROC protocol needs binary labels")
    auroc(np.zeros(len(ds)), ds.labels)  # DegenerateLabels if a class is absent
    n = len(ds)
    jobs_list = []
    for loss_name in proto.losses:
        jobs_list += [(ds, loss_name, proto, False, 0, k) for k in range(n)]
        for t in range(proto.trials):
            jobs_list += [(ds, loss_name, proto, True, t, k) for k in range(n)]
    flat = _pool_map(_outer_job, jobs_list, jobs)
    res = AurocResult()
    pos = 0
    n_aug = proto.mixup_count
    for loss_name in proto.losses:
        classical = auroc(flat[pos:pos + n], ds.labels)
        pos += n
        res.metrics.append((loss_name, "classical", 0, "loo", classical,
                            n - 1, 0, proto.seed))
        mix = []
        for t in range(proto.trials):
            a = auroc(flat[pos:pos + n], ds.labels)
            pos += n
            mix.append(a)
            res.metrics.append((loss_name, "mixup", t, "loo", a, n - 1, n_aug,
                                proto.seed + t))
        res.table.append((loss_name, classical,
                          float(np.mean(mix)) if mix else math.nan))
    return res


def write_auroc_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["loss", "classical", "mixup"])
        for loss, c, m in result.table:
            w.writerow([loss, repr(c), repr(m)])


def write_metrics_csv(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["loss", "method", "trial", "fold", "auroc", "n_train",
                    "n_aug", "seed"])
        for row in result.metrics:
            w.writerow([row[0], row[1], row[2], row[3], repr(row[4]), row[5],
                        row[6], row[7]])
