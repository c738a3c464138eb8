"""Oracle suites: brute-force conjugates, finite differences and duality checks.

Each suite returns a :class:`SuiteResult` with its worst residual. The
oracles here deliberately avoid the closed forms and the golden-section
search they check: conjugates are maximised over a dense grid, infimal
convolutions are minimised over a dense grid of splits.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _core
from .data import two_gaussians
from .kernels import KernelSpec
from .losses import (LossSpec, conjugate_value, mixup_conjugate,
                     mixup_loss_grad, mixup_loss_value)
from .mixup import MixupConfig, augment, make_rng
from .objectives import (Problem, decomp_model, decompose, decomposed_risk,
                         dual_decomp, dual_naive, naive_model, primal_risk)
from .solvers import (build_aux_table, find_F_tilde, init_state,
                      sdca_approx_step)

__all__ = [
    "SuiteResult",
    "LOSS_NAMES",
    "grid_conjugate",
    "grid_infconv",
    "random_problem",
    "check_conjugates",
    "check_infconv",
    "check_gradients",
    "check_fenchel_young",
    "audit_f_tilde",
    "check_decomposition",
    "check_weak_duality",
    "run_all",
]

LOSS_NAMES = ("bce", "smoothed-hinge", "quadratic-hinge")


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    limit: float
    count: int

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {self.name:<16} worst={self.worst:.3e} "
                f"limit={self.limit:.1e} n={self.count}")


# --------------------------------------------------------------------------
# grid oracles


@njit(cache=True)
def _grid_sup(a_vals, zeta, phi):
    out = np.empty(a_vals.shape[0])
    for k in range(a_vals.shape[0]):
        a = a_vals[k]
        best = -np.inf
        for t in range(zeta.shape[0]):
            v = a * zeta[t] - phi[t]
            if v > best:
                best = v
        out[k] = best
    return out


def grid_conjugate(loss, a_vals, step=1e-4, lim=50.0):
    """``max_zeta a*zeta - phi0(zeta)`` over ``zeta`` in ``[-lim, lim]``."""
    m = int(round(2 * lim / step))
    zeta = np.linspace(-lim, lim, m + 1)
    phi = _core.phi0_u(loss.code, loss.gamma_sm, zeta)
    return _grid_sup(np.atleast_1d(np.asarray(a_vals, dtype=float)), zeta, phi)


@njit(cache=True)
def _grid_inf(kind, gamma, a, y, lo, hi, step):
    c1 = 0.5 * (1.0 + y)
    c2 = 0.5 * (1.0 - y)
    m = int(math.ceil((hi - lo) / step))
    best = np.inf
    for t in range(m + 1):
        u = lo + t * (hi - lo) / max(m, 1)
        v = (c1 * _core.conj0(kind, gamma, u / c1)
             + c2 * _core.conj0(kind, gamma, (u - a) / c2))
        if v < best:
            best = v
    return best


def grid_infconv(loss, a, y, step=1e-5):
    """Brute-force ``min_u c1 phi0*(u/c1) + c2 phi0*((u-a)/c2)`` for |y| < 1.

    The split ``u`` runs over ``[max(-c1, a - c2), min(0, a)]`` for the
    losses with conjugate domain ``[-1, 0]``; for the quadratic hinge the
    lower end is cut at a point below every possible minimiser.
    """
    c1, c2 = 0.5 * (1 + y), 0.5 * (1 - y)
    hi = min(0.0, a)
    if loss.kind.name == "QUADRATIC_HINGE":
        lo = hi - 2.0 * abs(a) - 4.0 / loss.gamma_sm - 1.0
    else:
        lo = max(-c1, a - c2)
    if lo > hi:
        return math.inf
    return float(_grid_inf(loss.code, loss.gamma_sm, float(a), float(y),
                           lo, hi, step))


def _domain_samples(loss, rng, size):
    lo = -1.0 if loss.kind.name != "QUADRATIC_HINGE" else -6.0 / loss.gamma_sm
    return rng.uniform(lo, 0.0, size)


def random_problem(rng, n, loss, frac=0.5, d=3, lam_over_n=1.0, kernel=None,
                   gram_cache=True):
    """Two-Gaussian data plus mixup so that about ``frac`` of labels mix."""
    n_base = max(2, int(round(n * (1 - frac))))
    seed = int(rng.integers(0, 2**31))
    base = two_gaussians(n_base, d=d, separation=1.5, seed=seed)
    ds = augment(base, MixupConfig(n - n_base, seed=seed + 1))
    kernel = kernel or KernelSpec.rbf(float(rng.uniform(0.5, 3.0)))
    return Problem(ds, loss, kernel, lam_over_n / len(ds),
                   gram_cache=gram_cache)


def _random_labels(rng, size):
    # mass on the endpoints as well as the interior
    y = rng.uniform(-1.0, 1.0, size)
    pick = rng.random(size)
    y[pick < 0.1] = 1.0
    y[(pick >= 0.1) & (pick < 0.2)] = -1.0
    return y


# --------------------------------------------------------------------------
# suites


def check_conjugates(samples=1000, seed=0, limit=1e-5):
    rng = make_rng(seed)
    worst = 0.0
    for name in LOSS_NAMES:
        loss = LossSpec.from_name(name)
        a = _domain_samples(loss, rng, samples)
        ref = grid_conjugate(loss, a)
        got = np.array([conjugate_value(loss, v) for v in a])
        worst = max(worst, float(np.max(np.abs(got - ref))))
    return SuiteResult("conjugate", worst <= limit, worst, limit,
                       samples * len(LOSS_NAMES))


def check_infconv(samples=300, seed=0, limit=1e-6):
    rng = make_rng(seed)
    worst = 0.0
    for k in range(samples):
        loss = LossSpec.from_name(LOSS_NAMES[k % 3])
        y = float(rng.uniform(-0.98, 0.98))
        width = 4.0 if loss.kind.name == "QUADRATIC_HINGE" else 1.0
        a = float(rng.uniform(-width, width))
        ref = grid_infconv(loss, a, y)
        got = mixup_conjugate(loss, a, y)
        if math.isinf(ref) or math.isinf(got):
            err = 0.0 if math.isinf(ref) and math.isinf(got) else math.inf
        else:
            err = abs(got - ref)
        worst = max(worst, err)
    return SuiteResult("infconv", worst <= limit, worst, limit, samples)


def check_gradients(samples=1000, seed=0, limit=1e-6, h=1e-5):
    """Relative error ``|g - fd| / max(1, |g|)`` of the mixup gradient."""
    rng = make_rng(seed)
    worst = 0.0
    for k in range(samples):
        loss = LossSpec.from_name(LOSS_NAMES[k % 3])
        y = float(_random_labels(rng, 1)[0])
        s = float(rng.uniform(-8.0, 8.0))
        g = mixup_loss_grad(loss, s, y)
        fd = (mixup_loss_value(loss, s + h, y)
              - mixup_loss_value(loss, s - h, y)) / (2 * h)
        worst = max(worst, abs(g - fd) / max(1.0, abs(g)))
    return SuiteResult("gradient", worst <= limit, worst, limit, samples)


def check_fenchel_young(samples=1000, seed=0, limit=1e-8):
    """``phi(s) + phi*(a) - a s`` is >= 0 and vanishes at ``a = phi'(s)``."""
    rng = make_rng(seed)
    worst = 0.0
    for k in range(samples):
        loss = LossSpec.from_name(LOSS_NAMES[k % 3])
        y = float(_random_labels(rng, 1)[0])
        s = float(rng.uniform(-6.0, 6.0))
        g = mixup_loss_grad(loss, s, y)
        tight = (mixup_loss_value(loss, s, y) + mixup_conjugate(loss, g, y)
                 - g * s)
        a = g + float(rng.normal(0.0, 0.3))
        loose = (mixup_loss_value(loss, s, y) + mixup_conjugate(loss, a, y)
                 - a * s)
        worst = max(worst, abs(tight), max(0.0, -loose))
    return SuiteResult("fenchel-young", worst <= limit, worst, limit, samples)


def audit_f_tilde(steps=1000, seed=0, limit=1e-8, tol=1e-10):
    """Largest ``F_tilde - F_van`` over approx steps on random problems.

    Both the default and the tight grid rule are audited at every step.
    """
    rng = make_rng(seed)
    worst = -math.inf
    done = 0
    k = 0
    while done < steps:
        loss = LossSpec.from_name(LOSS_NAMES[k % 3])
        k += 1
        n = int(rng.integers(10, 101))
        p = random_problem(rng, n, loss, frac=float(rng.uniform(0.3, 0.8)),
                           lam_over_n=float(10 ** rng.uniform(-2, 0)))
        tab = build_aux_table(p)
        st = init_state(p, "approx", seed=int(rng.integers(0, 2**31)))
        for _ in range(min(3 * n, steps - done)):
            i = int(st.rng.integers(0, p.n))
            yi = float(p.y[i])
            if abs(yi) < 1.0:
                z, a = float(st.scores[i]), float(st.alpha[i])
                f_van = (mixup_loss_value(loss, z, yi)
                         + mixup_conjugate(loss, -a, yi, tol) + a * z)
                aux = tab.aux(i)
                for tight in (False, True):
                    ft = find_F_tilde(st, p, i, aux, tight=tight)
                    worst = max(worst, ft - f_van)
                done += 1
            sdca_approx_step(st, p, i, tab)
    return SuiteResult("f-tilde-bound", worst <= limit, worst, limit, done)


def check_decomposition(instances=50, seed=0, limit=1e-10):
    """Mixup risk equals the rearranged risk for arbitrary predictors."""
    rng = make_rng(seed)
    worst = 0.0
    for k in range(instances):
        loss = LossSpec.from_name(LOSS_NAMES[k % 3])
        n = int(rng.integers(5, 60))
        p = random_problem(rng, n, loss, frac=float(rng.uniform(0.0, 1.0)))
        dp = decompose(p)
        alpha = -rng.uniform(0.0, 1.0, dp.n_tilde) * dp.weights
        model = decomp_model(dp, alpha)
        a = primal_risk(p, model)
        b = decomposed_risk(dp, model)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return SuiteResult("decomposition", worst <= limit, worst, limit,
                       instances)


def check_weak_duality(instances=30, seed=0, limit=1e-10):
    """Both duals at random feasible points stay below the primal."""
    rng = make_rng(seed)
    worst = -math.inf
    for k in range(instances):
        loss = LossSpec.from_name(LOSS_NAMES[k % 3])
        n = int(rng.integers(5, 40))
        p = random_problem(rng, n, loss)
        dp = decompose(p)
        # alpha_i = t y_i and beta_j = t w_j with t in [0, 1] are always feasible
        alpha = p.y * rng.uniform(0.0, 1.0, p.n)
        beta = rng.uniform(0.0, 1.0, dp.n_tilde) * dp.weights
        d0, d1 = dual_naive(p, alpha), dual_decomp(dp, beta)
        if not (math.isfinite(d0) and math.isfinite(d1)):
            return SuiteResult("weak-duality", False, math.inf, limit, k + 1)
        for model in (naive_model(p, alpha), decomp_model(dp, beta),
                      naive_model(p, rng.normal(0.0, 1.0, p.n))):
            pr = primal_risk(p, model)
            worst = max(worst, d0 - pr, d1 - pr)
    return SuiteResult("weak-duality", worst <= limit, worst, limit,
                       instances)


SUITES = (
    check_conjugates,
    check_infconv,
    check_gradients,
    check_fenchel_young,
    audit_f_tilde,
    check_decomposition,
    check_weak_duality,
)


def run_all(seed=0, out=print):
    """Run every suite; returns the list of results (stops at nothing)."""
    results = []
    for fn in SUITES:
        r = fn(seed=seed)
        out(r.line())
        results.append(r)
    return results
