"""Acceptance criteria, each checked at its stated tolerance.

Every test records one PASS/FAIL line that is repeated in the pytest terminal
summary under "acceptance criteria".
"""
import math
import os
import time

import numpy as np
import pytest

from mixsdca import (KernelSpec, LossSpec, MixupConfig, Problem, augment,
                     conjugate_value, decompose, dual_decomp, dual_naive,
                     mixup_conjugate, mixup_loss_grad, mixup_loss_value,
                     primal_risk)
from mixsdca.bench import (AurocProtocol, eval_auroc_protocol, run_bench,
                           summarize_bench, write_auroc_csv)
from mixsdca.cli import main
from mixsdca.data import spambase_like, standardize, subsample, two_gaussians
from mixsdca.objectives import decomposed_risk, naive_model, primal_from_scores
from mixsdca.selfcheck import grid_conjugate, grid_infconv, random_problem
from mixsdca.solvers import (TrainBudget, build_aux_table,
                             init_state, reference_solution, sdca_approx_step,
                             sdca_decomp_step, sdca_naive_step, train)

from conftest import LOSS_NAMES, record

LOSSES = [LossSpec.from_name(n) for n in LOSS_NAMES]


def _domain_lo(loss):
    return -6.0 / loss.gamma_sm if loss.name == "quadratic-hinge" else -1.0


@pytest.fixture(scope="module")
def problem200():
    """200 examples: 100 two-Gaussian points plus 100 mixup points, BCE."""
    base = two_gaussians(100, d=2, separation=2.0, seed=11)
    ds = augment(base, MixupConfig(100, seed=12))
    return Problem(ds, LossSpec.from_name("bce"), KernelSpec.rbf(math.sqrt(2)),
                   1.0 / len(ds))


@pytest.fixture(scope="module")
def reference200(problem200):
    return reference_solution(problem200, gap=1e-12)


# 1 -------------------------------------------------------------------------

def test_01_conjugate_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for loss in LOSSES:
        a = rng.uniform(_domain_lo(loss), 0.0, 1000)
        closed = np.array([conjugate_value(loss, v) for v in a])
        oracle = grid_conjugate(loss, a, step=1e-4, lim=50.0)
        worst = max(worst, float(np.max(np.abs(closed - oracle))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 10.0
    record(1, ok, f"max |closed - grid| = {worst:.2e} (<= 1e-5), "
                  f"{elapsed:.1f}s (< 10s)")
    assert ok


# 2 -------------------------------------------------------------------------

def test_02_infconv_oracle():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(300):
        loss = LOSSES[k % 3]
        y = rng.uniform(-0.999, 0.999)
        # dual argument a = -alpha with alpha feasible for label y
        alpha = rng.uniform(min(0.0, y), max(0.0, y)) if loss.name != \
            "quadratic-hinge" else rng.uniform(-3.0, 3.0)
        a = -alpha
        v = mixup_conjugate(loss, a, y, 1e-10)
        ref = grid_infconv(loss, a, y, step=1e-5)
        if not (math.isinf(v) and math.isinf(ref)):
            worst = max(worst, abs(v - ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 60.0
    record(2, ok, f"max |infconv - u-grid| = {worst:.2e} (<= 1e-6), "
                  f"{elapsed:.1f}s (< 60s)")
    assert ok


# 3 -------------------------------------------------------------------------

def test_03_gradient_check():
    rng = np.random.default_rng(303)
    h = 1e-5
    worst = 0.0
    checked = 0
    while checked < 1000:
        loss = LOSSES[checked % 3]
        y = rng.uniform(-1.0, 1.0) if checked % 5 else float(rng.choice([-1, 1]))
        s = rng.uniform(-6.0, 6.0)
        # skip points within h of a kink of the piecewise losses
        kinks = {"bce": (), "smoothed-hinge": (1 - loss.gamma_sm, 1.0),
                 "quadratic-hinge": (1.0,)}[loss.name]
        if any(abs(abs(s) - k) < 2 * h or abs(-s - k) < 2 * h for k in kinks):
            continue
        g = mixup_loss_grad(loss, s, y)
        fd = (mixup_loss_value(loss, s + h, y)
              - mixup_loss_value(loss, s - h, y)) / (2 * h)
        worst = max(worst, abs(g - fd) / max(1.0, abs(g)))
        checked += 1
    ok = worst <= 1e-6
    record(3, ok, f"max relative gradient error = {worst:.2e} (<= 1e-6)")
    assert ok


# 4 -------------------------------------------------------------------------

def test_04_f_tilde_lower_bound():
    rng = np.random.default_rng(404)
    violations = steps = 0
    worst = -math.inf
    min_frac = 1.0
    while steps < 1200:
        loss = LOSSES[steps // 100 % 3]
        n_base = int(rng.integers(10, 40))
        p = random_problem(rng, n_base, loss, frac=0.5,
                           lam_over_n=float(10 ** rng.uniform(-2, 0)))
        assert p.n <= 100
        frac = float(np.mean(np.abs(p.y) < 1))
        if frac < 0.3:
            continue
        min_frac = min(min_frac, frac)
        s = init_state(p, "approx", int(rng.integers(1 << 30)))
        tab = build_aux_table(p)
        for _ in range(3 * p.n):
            i = int(s.rng.integers(p.n))
            z, a, y = s.scores[i], s.alpha[i], p.y[i]
            f_van = (mixup_loss_value(loss, z, y)
                     + mixup_conjugate(loss, -a, y, 1e-10) + a * z)
            q = sdca_approx_step(s, p, i, tab)
            if abs(y) < 1 and q.q != 0.0:
                worst = max(worst, q.F - f_van)
                violations += q.F > f_van + 1e-8
                steps += 1
    ok = violations == 0
    record(4, ok, f"{violations} violations of F_tilde <= F_van + 1e-8 in "
                  f"{steps} fractional-label steps (worst excess {worst:.1e}, "
                  f"min fractional share {min_frac:.2f})")
    assert ok


# 5 -------------------------------------------------------------------------

def test_05_monotone_dual_ascent():
    rng = np.random.default_rng(505)
    worst = {"naive": 0.0, "approx": 0.0, "decomp": 0.0}
    for k in range(20):
        loss = LOSSES[k % 3]
        p = random_problem(rng, int(rng.integers(8, 25)), loss, frac=0.5,
                           lam_over_n=float(10 ** rng.uniform(-2, 0)))
        assert p.n <= 50
        dp = decompose(p)
        tab = build_aux_table(p)
        for variant in worst:
            prob = dp if variant == "decomp" else p
            s = init_state(prob, variant, k)
            size = dp.n_tilde if variant == "decomp" else p.n
            dual = (lambda: dual_decomp(dp, s.alpha)) if variant == "decomp" \
                else (lambda: dual_naive(p, s.alpha))
            prev = dual()
            for _ in range(5 * size):
                j = int(s.rng.integers(size))
                if variant == "naive":
                    sdca_naive_step(s, p, j)
                elif variant == "approx":
                    sdca_approx_step(s, p, j, tab)
                else:
                    sdca_decomp_step(s, dp, j)
                cur = dual()
                worst[variant] = max(worst[variant], prev - cur)
                prev = cur
    ok = all(v <= 1e-9 for v in worst.values())
    record(5, ok, "largest single-step dual decrease " + ", ".join(
        f"{k}={v:.1e}" for k, v in worst.items()) + " (<= 1e-9)")
    assert ok


# 6 -------------------------------------------------------------------------

def test_06_strong_duality(problem200):
    t0 = time.perf_counter()
    primals, gaps = {}, {}
    for variant in ("naive", "approx", "decomp"):
        _, tr = train(problem200, variant, TrainBudget(20000, 1e-8))
        assert tr.converged
        primals[variant] = tr.final.primal
        gaps[variant] = abs(tr.final.primal - tr.final.dual)
    elapsed = time.perf_counter() - t0
    vals = np.array(list(primals.values()))
    spread = float((vals.max() - vals.min()) / abs(vals.mean()))
    ok = max(gaps.values()) <= 1e-8 and spread <= 1e-4 and elapsed < 120
    record(6, ok, f"max |P - D| = {max(gaps.values()):.1e} (<= 1e-8), "
                  f"primal spread {spread:.1e} (<= 1e-4), {elapsed:.1f}s")
    assert ok


# 7 -------------------------------------------------------------------------

def _iterations_to_gap(p, variant, seed, target=1e-5, every=10):
    dp = decompose(p) if variant == "decomp" else None
    s = init_state(dp or p, variant, seed)
    tab = build_aux_table(p)
    size = dp.n_tilde if dp else p.n
    t = 0
    while True:
        for _ in range(every):
            j = int(s.rng.integers(size))
            if dp:
                sdca_decomp_step(s, dp, j)
            else:
                sdca_approx_step(s, p, j, tab)
            t += 1
        if dp:
            coeffs = np.bincount(dp.anchor_map, weights=dp.signs * s.alpha,
                                 minlength=p.n)
            primal = primal_from_scores(p, coeffs, s.scores, dp.scale)
            dual = dual_decomp(dp, s.alpha, scores=s.scores)
        else:
            primal = primal_from_scores(p, s.alpha, s.scores, s.model_scale)
            dual = dual_naive(p, s.alpha, scores=s.scores)
        if primal - dual <= target:
            return t


def test_07_iteration_bounds(problem200, reference200):
    p = problem200
    r2 = float(p.diag.max())
    g = p.loss.gamma_sm
    d_star = reference200["primal"]
    bounds, medians = {}, {}
    for variant in ("approx", "decomp"):
        if variant == "approx":
            inv_beta = p.n + r2 / (p.lam * g)
            h0 = d_star - dual_naive(p, np.zeros(p.n))
        else:
            inv_beta = 2 * p.n + 2 * r2 / (p.lam * g)
            dp = decompose(p)
            h0 = d_star - dual_decomp(dp, np.zeros(dp.n_tilde))
        bounds[variant] = inv_beta * math.log(h0 * inv_beta / 1e-5)
        medians[variant] = float(np.median(
            [_iterations_to_gap(p, variant, seed) for seed in range(5)]))
    ok = all(medians[v] <= bounds[v] for v in bounds)
    record(7, ok, ", ".join(f"{v}: median {medians[v]:.0f} <= bound "
                            f"{bounds[v]:.0f}" for v in bounds))
    assert ok


# 8 -------------------------------------------------------------------------

def test_08_decomposition_identity():
    rng = np.random.default_rng(808)
    worst = 0.0
    for k in range(50):
        loss = LOSSES[k % 3]
        p = random_problem(rng, int(rng.integers(5, 40)), loss, frac=0.6)
        m = naive_model(p, rng.normal(size=p.n))
        a, b = primal_risk(p, m), decomposed_risk(decompose(p), m)
        worst = max(worst, abs(a - b) / abs(a))
    ok = worst <= 1e-10
    record(8, ok, f"max relative difference = {worst:.1e} (<= 1e-10)")
    assert ok


# 9 -------------------------------------------------------------------------

def test_09_linear_convergence_shape(problem200, reference200):
    d_star = reference200["primal"]
    fits = {}
    for variant in ("approx", "decomp"):
        _, tr = train(problem200, variant, TrainBudget(20000, 1e-10), seed=1)
        err = d_star - tr.column("dual")
        it = tr.column("n_steps").astype(float)
        # geometric phase: past the first epoch, above the reference accuracy
        keep = (tr.column("epoch") >= 1) & (err > 1e-9)
        x, y = it[keep], np.log10(err[keep])
        slope, icpt = np.polyfit(x, y, 1)
        resid = y - (slope * x + icpt)
        r2 = 1 - resid.var() / y.var()
        fits[variant] = (slope, r2, int(keep.sum()))
    ok = all(s < 0 and r2 >= 0.9 for s, r2, _ in fits.values())
    record(9, ok, ", ".join(f"{v}: slope {s:.2e}, R^2 {r2:.3f} ({m} points)"
                            for v, (s, r2, m) in fits.items()))
    assert ok


# 10 ------------------------------------------------------------------------

def test_10_wall_clock_ordering():
    ds = subsample(spambase_like(seed=0), 1000, seed=0)
    ds, _ = standardize(ds)
    ds = augment(ds, MixupConfig(500, seed=0))
    t0 = time.perf_counter()
    rows = run_bench(ds, ["naive", "approx", "decomp"], [1.0, 0.1, 0.01],
                     loss=LossSpec.from_name("bce"),
                     kernel=KernelSpec.rbf(math.sqrt(ds.dim)),
                     budget=TrainBudget(5000, 1e-5, snapshot_every=1),
                     seeds=[0], jobs=1)
    elapsed = time.perf_counter() - t0
    total = {s["solver"]: s["total_seconds"] for s in summarize_bench(rows)}
    epochs = {(r.solver, r.lam_over_n): r.epochs for r in rows}
    if any(v is None for v in total.values()):
        ok, ratio = False, float("nan")
    else:
        ratio = total["decomp"] / total["approx"]
        ok = (total["approx"] < total["naive"]
              and total["approx"] < total["decomp"]
              and 1.2 <= ratio <= 4.0 and elapsed < 900)
    detail = ", ".join(f"{k}={'N/A' if v is None else f'{v:.1f}s'}"
                       for k, v in total.items())
    detail += f", decomp/approx = {ratio:.2f} (in [1.2, 4.0]); epochs " + \
        " ".join(f"{s}@{l:g}:{e}" for (s, l), e in sorted(epochs.items()))
    record(10, ok, detail)
    assert ok


# 11 ------------------------------------------------------------------------

def test_11_auroc_protocol(tmp_path):
    t0 = time.perf_counter()
    res = eval_auroc_protocol(two_gaussians(24, seed=0), AurocProtocol(),
                              jobs=os.cpu_count() or 1)
    elapsed = time.perf_counter() - t0
    path = tmp_path / "auroc.csv"
    write_auroc_csv(res, str(path))
    lines = path.read_text().splitlines()
    values = [v for _, c, m in res.table for v in (c, m)]
    ok = (lines[0] == "loss,classical,mixup" and len(res.table) == 3
          and {r[0] for r in res.table} == set(LOSS_NAMES)
          and all(np.isfinite(values)) and min(values) >= 0.8
          and elapsed < 600)
    record(11, ok, "; ".join(f"{l}: {c:.3f}/{m:.3f}" for l, c, m in res.table)
           + f" (classical/mixup, all >= 0.8), {elapsed:.0f}s (< 600s) on "
           f"{os.cpu_count()} cpu")
    assert ok


# 12 ------------------------------------------------------------------------

def test_12_determinism(tmp_path):
    data = "synthetic:gaussians:30"
    runs = {}
    for k in range(2):
        for solver in ("naive", "approx", "decomp"):
            out = tmp_path / f"train-{solver}-{k}.csv"
            main(["train", data, "--mixup-count", "20", "--solver", solver,
                  "--seed", "7", "--freeze-clock", "--trace-out", str(out)])
            runs.setdefault(solver, []).append(out.read_bytes())
        out = tmp_path / f"bench-{k}.csv"
        main(["bench", data, "--mixup-count", "20", "--seeds", "0,1",
              "--lambda-over-n", "1,0.1", "--freeze-clock", "--out", str(out)])
        runs.setdefault("bench", []).append(out.read_bytes())
    same = {k: v[0] == v[1] and len(v[0]) > 0 for k, v in runs.items()}
    ok = all(same.values())
    record(12, ok, "bitwise identical: " + ", ".join(
        f"{k}={'yes' if v else 'no'}" for k, v in same.items()))
    assert ok
