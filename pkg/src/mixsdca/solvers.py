"""Stochastic dual coordinate ascent for mixup-augmented kernel learning.

Three SDCA variants are provided, plus a primal SGD baseline:

``naive``
    Vanilla SDCA on the naive dual. The step coefficient ``F`` needs the
    conjugate of the mixup loss, which is an infimal convolution evaluated by
    a numeric search at every step.
``approx``
    Same dual, but ``F`` is replaced by a lower bound computed from a
    log-spaced grid of candidate points. No inner search.
``decomp``
    Vanilla SDCA on the dual of the rearranged risk, in which each example
    contributes up to two weighted base losses with closed-form conjugates.
``sgd``
    Functional stochastic gradient descent with a fixed step size.

Each variant keeps a vector of cached scores ``f(x_j)`` that is updated in
O(n) per step and re-synchronised once per epoch.
"""
import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .errors import DegenerateLevelSet
from .kernels import DualModel
from .losses import DEFAULT_CONJ_TOL
from .mixup import make_rng
from .objectives import (
    decompose,
    decomp_model,
    dual_decomp,
    dual_naive,
    naive_model,
    primal_from_scores,
)

__all__ = [
    "VARIANTS",
    "SolverOptions",
    "TrainBudget",
    "TraceRow",
    "RunTrace",
    "SolverState",
    "StepQuantities",
    "GridSearchAux",
    "AuxTable",
    "build_grid_aux",
    "build_aux_table",
    "find_F_tilde",
    "init_state",
    "sdca_naive_step",
    "sdca_approx_step",
    "sdca_decomp_step",
    "sgd_step",
    "state_model",
    "train",
    "reference_solution",
]

VARIANTS = ("naive", "approx", "decomp", "sgd")
CONVERGED = "Converged"
NOT_CONVERGED = "NotConverged"
TRACE_HEADER = ("epoch", "wall_seconds", "primal", "dual", "gap", "n_steps")


@dataclass
class SolverOptions:
    """Knobs shared by the solvers.

    conj_tol
        Golden-section width for the conjugate inside naive steps.
    dual_tol
        Same, for evaluating the naive dual at snapshots.
    tight_zeta
        In the approx grid search, take the admissible grid point closest to
        the gradient crossing instead of the one closest to zero.
    grid_scan
        ``"binary"`` or ``"linear"`` search over the grid (same result).
    grid_size, grid_offset
        Number of grid intervals (default: dataset size) and the exponent
        offset of the smallest grid magnitude ``exp(-offset)``.
    uniform_gamma
        Decomposition only: use ``gamma_sm / 2`` for every coordinate instead
        of the per-coordinate ``gamma_sm / weight``.
    sgd_eta
        Step size; required for ``sgd``.
    """

    conj_tol: float = DEFAULT_CONJ_TOL
    dual_tol: float = DEFAULT_CONJ_TOL
    tight_zeta: bool = False
    grid_scan: str = "binary"
    grid_size: int = None
    grid_offset: float = 4.0
    uniform_gamma: bool = False
    sgd_eta: float = None
    level_xtol: float = 1e-8

    def __post_init__(self):
        if self.grid_scan not in ("binary", "linear"):
            raise ValueError("grid_scan must be 'binary' or 'linear'")


@dataclass
class TrainBudget:
    epochs: int = 5000
    gap_threshold: float = 1e-5
    snapshot_every: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("budget needs at least one epoch")
        if not self.gap_threshold > 0:
            raise ValueError("gap_threshold must be positive")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass
class TraceRow:
    epoch: int
    wall_seconds: float
    primal: float
    dual: float
    gap: float
    n_steps: int


@dataclass
class RunTrace:
    variant: str
    threshold: float
    rows: list = field(default_factory=list)
    status: str = NOT_CONVERGED
    snapshot_seconds: float = 0.0
    max_score_drift: float = 0.0

    @property
    def converged(self):
        return self.status == CONVERGED

    @property
    def final(self):
        return self.rows[-1]

    @property
    def epochs(self):
        return self.rows[-1].epoch

    @property
    def wall_seconds(self):
        return self.rows[-1].wall_seconds

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path, freeze_clock=False):
        """Write ``epoch,wall_seconds,primal,dual,gap,n_steps``.

        ``freeze_clock`` writes 0 for the wall time so that files from
        identical runs compare equal byte for byte.
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for r in self.rows:
                t = 0.0 if freeze_clock else r.wall_seconds
                w.writerow([r.epoch, repr(t), repr(r.primal), repr(r.dual),
                            repr(r.gap), r.n_steps])


@dataclass
class SolverState:
    """Dual (or SGD coefficient) vector plus cached scores ``f(x_j)``."""

    alpha: np.ndarray
    scores: np.ndarray
    iter: int
    rng: np.random.Generator
    model_scale: float


@dataclass(frozen=True)
class StepQuantities:
    z: float
    u: float
    q: float
    K_ii: float
    s_bar: float
    F: float
    eta: float


@dataclass(frozen=True)
class GridSearchAux:
    """Level-set bounds and log-spaced grids for one fractional label.

    ``b_lower <= 0 <= b_upper`` bound ``{z : phi_mup(z; y) <= n phi0(0)}``.
    """

    b_lower: float
    b_upper: float
    alpha_diamond: float
    grid_size: int
    offset: float = 4.0

    def _grid(self, bound, sign):
        m = self.grid_size
        k = np.arange(m + 1)
        b = max(bound, 1e-300)
        return sign * np.exp((k / m) * (self.offset + np.log(b)) - self.offset)

    @property
    def grid_pos(self):
        return self._grid(self.b_upper, 1.0)

    @property
    def grid_neg(self):
        return self._grid(-self.b_lower, -1.0)


def _check_level(b_lo, b_up):
    if np.any(np.isnan(b_lo)) or np.any(np.isnan(b_up)):
        raise DegenerateLevelSet("level set of the mixup loss is unbounded")


def build_grid_aux(loss, y, n, grid_size=None, offset=4.0, xtol=1e-8):
    if abs(y) >= 1.0:
        raise ValueError("grid search is only used for |y| < 1")
    level = n * float(_core.phi0(loss.code, loss.gamma_sm, 0.0))
    b_lo, b_up = _core.level_bounds(loss.code, loss.gamma_sm, float(y),
                                    level, xtol)
    _check_level(b_lo, b_up)
    a_dia = -_core.dphi_mup(loss.code, loss.gamma_sm, 0.0, float(y))
    return GridSearchAux(float(b_lo), float(b_up), float(a_dia),
                         int(grid_size or n), float(offset))


@dataclass
class AuxTable:
    """Per-example grid parameters; computed once per distinct label."""

    b_lo: np.ndarray
    b_up: np.ndarray
    a_dia: np.ndarray
    grid_size: int
    offset: float

    def aux(self, i):
        return GridSearchAux(float(self.b_lo[i]), float(self.b_up[i]),
                             float(self.a_dia[i]), self.grid_size, self.offset)


def build_aux_table(p, options=None):
    options = options or SolverOptions()
    level = p.n * float(_core.phi0(p.loss.code, p.loss.gamma_sm, 0.0))
    uy, inv = np.unique(p.y, return_inverse=True)
    tab = _core.aux_table(p.loss.code, p.loss.gamma_sm, uy, level,
                          options.level_xtol)
    frac = np.abs(uy) < 1.0
    _check_level(tab[0, frac], tab[1, frac])
    inv = inv.ravel()
    return AuxTable(
        np.ascontiguousarray(tab[0, inv]),
        np.ascontiguousarray(tab[1, inv]),
        np.ascontiguousarray(tab[2, inv]),
        int(options.grid_size or p.n),
        float(options.grid_offset),
    )


def find_F_tilde(state, p, i, aux, tight=False, scan="binary"):
    """Lower bound on the naive step coefficient from the grid search."""
    return float(_core.f_tilde(
        p.loss.code, p.loss.gamma_sm, float(state.scores[i]), float(p.y[i]),
        float(state.alpha[i]), aux.b_lower, aux.b_upper, aux.alpha_diamond,
        aux.grid_size, aux.offset, tight, scan == "linear"))


def init_state(problem, variant, seed=0):
    """All-zero start (feasible for every supported loss)."""
    if variant == "decomp":
        p = problem.base
        size = problem.n_tilde
        scale = problem.scale
    else:
        p = problem
        size = p.n
        scale = 1.0 if variant == "sgd" else 1.0 / (p.lam * p.n)
    return SolverState(np.zeros(size), np.zeros(p.n), 0, make_rng(seed), scale)


def _step_out(r):
    return StepQuantities(*(float(v) for v in r))


def _nan_table(n):
    return np.full(n, np.nan)


def sdca_naive_step(state, p, i, tol=DEFAULT_CONJ_TOL):
    """One naive step on coordinate ``i``; updates ``state`` in place."""
    nan = _nan_table(p.n)
    r = _core.d0_step(i, state.alpha, state.scores, p.y, p.X, p.gram, p.diag,
                      p.kernel.params, p.loss.code, p.loss.gamma_sm, p.lam, 0,
                      tol, nan, nan, nan, 1, 4.0, False, False,
                      np.empty(p.n))
    state.iter += 1
    return _step_out(r)


def sdca_approx_step(state, p, i, aux_table, tight=False, scan="binary"):
    """One approximation step on coordinate ``i``; updates ``state`` in place.

    Binary labels use the exact coefficient and the plain parabola step.
    """
    r = _core.d0_step(i, state.alpha, state.scores, p.y, p.X, p.gram, p.diag,
                      p.kernel.params, p.loss.code, p.loss.gamma_sm, p.lam, 1,
                      DEFAULT_CONJ_TOL, aux_table.b_lo, aux_table.b_up,
                      aux_table.a_dia, aux_table.grid_size, aux_table.offset,
                      tight, scan == "linear", np.empty(p.n))
    state.iter += 1
    return _step_out(r)


def sdca_decomp_step(state, dp, j, uniform_gamma=False):
    p = dp.base
    r = _core.decomp_step(j, state.alpha, state.scores, dp.anchor_map,
                          dp.signs, dp.weights, p.X, p.gram, p.diag,
                          p.kernel.params, p.loss.code, p.loss.gamma_sm,
                          p.lam, dp.norm, uniform_gamma, np.empty(p.n))
    state.iter += 1
    return _step_out(r)


def sgd_step(state, p, i, eta):
    """``c <- (1 - eta lam) c`` then ``c_i -= eta * dphi_mup(f(x_i))``."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    g = _core.sgd_step(i, state.alpha, state.scores, p.y, p.X, p.gram,
                       p.kernel.params, p.loss.code, p.loss.gamma_sm, p.lam,
                       float(eta), np.empty(p.n))
    state.iter += 1
    return float(g)


def state_model(problem, variant, state):
    if variant == "decomp":
        return decomp_model(problem, state.alpha)
    p = problem
    if variant == "sgd":
        return DualModel(p.kernel, p.X, state.alpha.copy(), 1.0, p.lam)
    return naive_model(p, state.alpha.copy())


_warmed = False


def _warmup():
    """Trigger compilation before any timed region."""
    global _warmed
    if _warmed:
        return
    from .kernels import KernelSpec
    from .losses import LossSpec
    from .mixup import LabeledDataset
    from .objectives import Problem

    ds = LabeledDataset(np.array([[0.0], [1.0], [0.5]]),
                        np.array([1.0, -1.0, 0.0]))
    for cache in (True, False):
        p = Problem(ds, LossSpec.from_name("bce"), KernelSpec.rbf(1.0), 0.5,
                    gram_cache=cache)
        for v in VARIANTS:
            train(p, v, TrainBudget(epochs=1), options=SolverOptions(
                sgd_eta=0.1), _timed=False)
    _warmed = True


def train(p, variant, budget=None, seed=0, options=None, _timed=True):
    """Run one solver from zero until the duality gap meets the threshold.

    Returns the induced :class:`DualModel` and the :class:`RunTrace`. A run
    that exhausts ``budget.epochs`` is marked ``NotConverged`` (not an error).
    The SGD baseline certifies its gap with the naive dual evaluated at
    ``alpha_i = -dphi_mup(f(x_i); y_i)``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown solver {variant!r}")
    budget = budget or TrainBudget()
    options = options or SolverOptions()
    if variant == "sgd" and not (options.sgd_eta and options.sgd_eta > 0):
        raise ValueError("sgd needs a positive sgd_eta")
    if _timed:
        _warmup()
    # Gram construction is excluded from timing
    K, diag, X, y, kp = p.gram, p.diag, p.X, p.y, p.kernel.params
    code, gamma, lam = p.loss.code, p.loss.gamma_sm, p.lam

    t0 = time.perf_counter()
    problem = decompose(p) if variant == "decomp" else p
    state = init_state(problem, variant, seed)
    size = state.alpha.shape[0]
    trace = RunTrace(variant, budget.gap_threshold)
    if variant == "approx":
        aux = build_aux_table(p, options)
    else:
        nan = _nan_table(p.n)
        aux = AuxTable(nan, nan, nan, 1, options.grid_offset)

    def coeffs():
        if variant == "decomp":
            return decomp_model(problem, state.alpha).coeffs
        return state.alpha

    def take_snapshot(epoch, steps):
        ts = time.perf_counter()
        c = coeffs()
        primal = primal_from_scores(p, c, state.scores, state.model_scale)
        if variant == "decomp":
            dual = dual_decomp(problem, state.alpha, scores=state.scores)
        elif variant == "sgd":
            a_f = -_core.dphi_mup_u(code, gamma, state.scores, y)
            dual = dual_naive(p, a_f, tol=options.dual_tol)
        else:
            dual = dual_naive(p, state.alpha, tol=options.dual_tol,
                              scores=state.scores)
        now = time.perf_counter()
        trace.snapshot_seconds += now - ts
        trace.rows.append(TraceRow(epoch, now - t0, primal, dual,
                                   primal - dual, steps))
        return primal - dual

    gap = take_snapshot(0, 0)
    steps = 0
    linear = options.grid_scan == "linear"
    mode = 0 if variant == "naive" else 1
    epoch = 0
    while epoch < budget.epochs:
        # epochs up to the next snapshot run in one compiled call
        block = min(budget.snapshot_every - epoch % budget.snapshot_every,
                    budget.epochs - epoch)
        orders = state.rng.integers(0, size, size=(block, size))
        if variant == "decomp":
            drift = _core.decomp_block(
                orders, state.alpha, state.scores, problem.anchor_map,
                problem.signs, problem.weights, X, K, diag, kp, code, gamma,
                lam, problem.norm, options.uniform_gamma)
        elif variant == "sgd":
            drift = _core.sgd_block(orders, state.alpha, state.scores, y, X, K,
                                    kp, code, gamma, lam, options.sgd_eta)
        else:
            drift = _core.d0_block(
                orders, state.alpha, state.scores, y, X, K, diag, kp, code,
                gamma, lam, mode, options.conj_tol, aux.b_lo, aux.b_up,
                aux.a_dia, aux.grid_size, aux.offset, options.tight_zeta,
                linear)
        epoch += block
        steps += block * size
        state.iter += block * size
        if math.isfinite(drift):
            trace.max_score_drift = max(trace.max_score_drift, drift)
        gap = take_snapshot(epoch, steps)
        if gap <= budget.gap_threshold:
            break
        if not math.isfinite(trace.rows[-1].primal):
            break
    if gap <= budget.gap_threshold:
        trace.status = CONVERGED
    model = state_model(problem, variant, state)
    model.meta.update(variant=variant, alpha=state.alpha.copy())
    return model, trace


def reference_solution(p, gap=1e-11, max_epochs=100000, seed=12345):
    """High-precision optimum via the tight approximation solver.

    Returns a dict with ``primal``, ``dual``, ``alpha`` and ``model``.
    """
    opts = SolverOptions(tight_zeta=True)
    model, trace = train(p, "approx", TrainBudget(max_epochs, gap), seed=seed,
                         options=opts)
    return {
        "primal": trace.final.primal,
        "dual": trace.final.dual,
        "alpha": model.meta["alpha"],
        "model": model,
        "trace": trace,
    }
