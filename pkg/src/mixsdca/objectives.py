"""Primal risk, the two dual objectives, and duality-gap bookkeeping."""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _core
from .kernels import DualModel, KernelSpec, gram_diag, gram_matrix, predict
from .losses import DEFAULT_CONJ_TOL, DecomposedLoss, LossSpec
from .mixup import LabeledDataset

__all__ = [
    "Problem",
    "DecomposedProblem",
    "ObjectiveSnapshot",
    "primal_risk",
    "primal_from_scores",
    "dual_naive",
    "decompose",
    "dual_decomp",
    "decomposed_risk",
    "decomp_model",
    "naive_model",
    "snapshot",
]


@dataclass(eq=False)
class Problem:
    """Regularised mixup risk minimisation over an RKHS.

    With ``gram_cache`` the full kernel matrix is built once on first use;
    otherwise kernel rows are computed on demand by the solvers.
    """

    data: LabeledDataset
    loss: LossSpec
    kernel: KernelSpec
    lam: float
    gram_cache: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if len(self.data) == 0:
            raise ValueError("empty dataset")

    @property
    def n(self):
        return len(self.data)

    @cached_property
    def X(self):
        return np.ascontiguousarray(self.data.features, dtype=float)

    @cached_property
    def y(self):
        return np.ascontiguousarray(self.data.labels, dtype=float)

    @cached_property
    def diag(self):
        return gram_diag(self.kernel, self.X)[0]

    @property
    def r_max(self):
        return float(np.sqrt(self.diag.max()))

    @cached_property
    def gram(self):
        if self.gram_cache:
            return gram_matrix(self.kernel, self.X)
        return np.empty((0, 0))

    def kernel_matvec(self, coeffs, scale):
        return _core.kernel_matvec(self.X, self.gram, self.kernel.params,
                                   np.ascontiguousarray(coeffs, dtype=float),
                                   float(scale))


@dataclass(eq=False)
class DecomposedProblem:
    """The rearranged risk over signed, weighted copies of each example.

    Entry ``j`` of ``index_set`` (0-based into ``range(2n)``) carries sign
    ``signs[j]``, weight ``weights[j] = 1 + y_j`` (with ``y_{i+n} = -y_i``)
    and base example ``anchor_map[j]``. Zero-weight entries are dropped.
    ``norm`` is the averaging constant of the rearranged risk, ``2n``.
    """

    base: Problem
    index_set: np.ndarray
    signs: np.ndarray
    weights: np.ndarray
    anchor_map: np.ndarray
    norm: float

    @property
    def n_tilde(self):
        return int(self.index_set.shape[0])

    @property
    def scale(self):
        return 1.0 / (self.base.lam * self.norm)

    def component(self, j):
        return DecomposedLoss(float(self.weights[j]), self.base.loss)


@dataclass
class ObjectiveSnapshot:
    primal: float
    dual: float
    epoch: int
    wall_seconds: float
    gap: float = field(init=False)

    def __post_init__(self):
        self.gap = self.primal - self.dual


def naive_model(p, alpha):
    return DualModel(p.kernel, p.X, np.asarray(alpha, dtype=float),
                     1.0 / (p.lam * p.n), p.lam)


def decomp_model(dp, alpha):
    p = dp.base
    coeffs = np.bincount(dp.anchor_map, weights=dp.signs * np.asarray(alpha),
                         minlength=p.n)
    return DualModel(p.kernel, p.X, coeffs, dp.scale, p.lam)


def primal_from_scores(p, coeffs, scores, scale):
    """Risk from cached scores ``z_j = f(x_j)`` (norm via ``scale <c, z>``)."""
    norm_sq = max(scale * float(np.dot(coeffs, scores)), 0.0)
    loss = _core.sum_mup_loss(np.ascontiguousarray(scores), p.y,
                              p.loss.code, p.loss.gamma_sm)
    return 0.5 * p.lam * norm_sq + loss / p.n


def primal_risk(p, model):
    """``lam/2 ||f||^2 + mean_i phi_mup(f(x_i); y_i)``."""
    scores = predict(model, p.X)
    return primal_from_scores(p, model.coeffs, scores, model.scale)


def dual_naive(p, alpha, tol=DEFAULT_CONJ_TOL, scores=None):
    """Naive dual; ``-inf`` when some ``-alpha_i`` is outside the domain.

    ``scores`` may carry the cached ``f_alpha(x_j)`` to avoid a Gram product.
    """
    alpha = np.ascontiguousarray(alpha, dtype=float)
    scale = 1.0 / (p.lam * p.n)
    conj = _core.sum_mup_conj(alpha, p.y, p.loss.code, p.loss.gamma_sm, tol)
    if math.isinf(conj):
        return -math.inf
    if scores is None:
        scores = p.kernel_matvec(alpha, scale)
    norm_sq = max(scale * float(np.dot(alpha, scores)), 0.0)
    return -0.5 * p.lam * norm_sq - conj / p.n


def decompose(p):
    n = p.n
    y2 = np.concatenate([p.y, -p.y])
    w2 = 1.0 + y2
    idx = np.flatnonzero(w2 > 0.0)
    signs = np.where(idx < n, 1.0, -1.0)
    return DecomposedProblem(
        base=p,
        index_set=idx,
        signs=signs,
        weights=w2[idx],
        anchor_map=idx % n,
        norm=2.0 * n,
    )


def dual_decomp(dp, alpha, scores=None):
    """Dual of the rearranged risk (closed-form conjugates only)."""
    p = dp.base
    alpha = np.ascontiguousarray(alpha, dtype=float)
    conj = _core.sum_decomp_conj(alpha, dp.weights, p.loss.code,
                                 p.loss.gamma_sm)
    if math.isinf(conj):
        return -math.inf
    model = decomp_model(dp, alpha)
    if scores is None:
        scores = p.kernel_matvec(model.coeffs, model.scale)
    norm_sq = max(model.scale * float(np.dot(model.coeffs, scores)), 0.0)
    return -0.5 * p.lam * norm_sq - conj / dp.norm


def decomposed_risk(dp, model):
    """The rearranged form ``lam/2 ||f||^2 + (1/2n) sum_I w_j phi0(s_j f(x_j))``."""
    p = dp.base
    scores = predict(model, p.X)
    norm_sq = max(model.scale * float(np.dot(model.coeffs, scores)), 0.0)
    loss = _core.sum_decomp_loss(scores, dp.anchor_map, dp.signs, dp.weights,
                                 p.loss.code, p.loss.gamma_sm)
    return 0.5 * p.lam * norm_sq + loss / dp.norm


def snapshot(p, model, dual_value, epoch, t):
    return ObjectiveSnapshot(primal_risk(p, model), dual_value, epoch, t)
