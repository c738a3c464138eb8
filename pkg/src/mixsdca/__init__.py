"""Linearly convergent SDCA solvers for kernel classifiers trained on mixup data."""
from .errors import (
    DegenerateLabels,
    DegenerateLevelSet,
    DimensionMismatch,
    EmptyInterval,
    EtaOutOfRange,
    LabelDomainError,
    ParseError,
    TooFewExamples,
)
from .kernels import DualModel, KernelSpec, gram_diag, gram_matrix, kernel_eval, predict, rkhs_norm_sq
from .losses import (
    DecomposedLoss,
    LossKind,
    LossSpec,
    conjugate_value,
    decomposed_conjugate,
    loss_grad,
    loss_value,
    mixup_conjugate,
    mixup_conjugate_argmin_bounds,
    mixup_loss_grad,
    mixup_loss_value,
)
from .mixup import LabeledDataset, MixupConfig, augment, mixup_pair
from .objectives import (
    DecomposedProblem,
    Problem,
    decompose,
    dual_decomp,
    dual_naive,
    primal_risk,
)
from .solvers import SolverOptions, TrainBudget, reference_solution, train

__version__ = "0.1.0"
