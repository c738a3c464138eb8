"""Base losses, the mixup loss and their convex conjugates.

Three base losses are supported, all monotonically decreasing and smooth:

* binary cross entropy, ``log(1 + exp(-s))`` (smoothness constant fixed to 4),
* the smoothed hinge with parameter ``gamma_sm`` in (0, 1),
* the quadratic hinge ``max(0, 1 - s)**2 / (2 gamma_sm)``.

Conjugates that are undefined (outside the effective domain) evaluate to
``math.inf``. Every scalar function also accepts numpy arrays and broadcasts.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import EmptyInterval

__all__ = [
    "LossKind",
    "LossSpec",
    "DecomposedLoss",
    "loss_value",
    "loss_grad",
    "conjugate_value",
    "conjugate_domain",
    "mixup_loss_value",
    "mixup_loss_grad",
    "mixup_conjugate",
    "mixup_conjugate_argmin_bounds",
    "decomposed_conjugate",
    "DEFAULT_CONJ_TOL",
]

DEFAULT_CONJ_TOL = 1e-10


class LossKind(enum.IntEnum):
    BCE = _core.BCE
    SMOOTHED_HINGE = _core.SMOOTHED_HINGE
    QUADRATIC_HINGE = _core.QUADRATIC_HINGE


_NAMES = {
    "bce": LossKind.BCE,
    "smoothed-hinge": LossKind.SMOOTHED_HINGE,
    "quadratic-hinge": LossKind.QUADRATIC_HINGE,
}
_DEFAULT_GAMMA = {
    LossKind.BCE: 4.0,
    LossKind.SMOOTHED_HINGE: 0.5,
    LossKind.QUADRATIC_HINGE: 1.0,
}


@dataclass(frozen=True)
class LossSpec:
    """A base loss together with its smoothness constant.

    ``gamma_sm`` is the strong-convexity constant of the conjugate (the loss
    is ``1/gamma_sm``-smooth). For BCE it is always 4; passing any other value
    raises.
    """

    kind: LossKind
    gamma_sm: float = None

    def __post_init__(self):
        kind = LossKind(self.kind)
        object.__setattr__(self, "kind", kind)
        gamma = self.gamma_sm
        if gamma is None:
            gamma = _DEFAULT_GAMMA[kind]
        gamma = float(gamma)
        if kind == LossKind.BCE and gamma != 4.0:
            raise ValueError("gamma_sm is fixed to 4 for BCE")
        if kind == LossKind.SMOOTHED_HINGE and not 0.0 < gamma < 1.0:
            raise ValueError("smoothed hinge needs gamma_sm in (0, 1)")
        if kind == LossKind.QUADRATIC_HINGE and not gamma > 0.0:
            raise ValueError("quadratic hinge needs gamma_sm > 0")
        object.__setattr__(self, "gamma_sm", gamma)

    @classmethod
    def from_name(cls, name, gamma_sm=None):
        try:
            kind = _NAMES[name.lower().replace("_", "-")]
        except KeyError:
            raise ValueError(
                f"unknown loss {name!r}; expected one of {sorted(_NAMES)}"
            ) from None
        if kind == LossKind.BCE:
            gamma_sm = None
        return cls(kind, gamma_sm)

    @property
    def name(self):
        return {v: k for k, v in _NAMES.items()}[self.kind]

    @property
    def code(self):
        return int(self.kind)


@dataclass(frozen=True)
class DecomposedLoss:
    """``weight * phi0`` for one entry of the rearranged risk.

    ``weight`` is ``1 + y`` for the (possibly sign-flipped) label ``y``.
    """

    weight: float
    base: LossSpec

    def __post_init__(self):
        if not 0.0 < self.weight <= 2.0:
            raise ValueError(f"weight must be in (0, 2], got {self.weight}")

    @property
    def gamma(self):
        """Strong-convexity constant of this entry's conjugate."""
        return self.base.gamma_sm / self.weight


def _out(r):
    return float(r) if np.ndim(r) == 0 else r


def loss_value(loss, s):
    return _out(_core.phi0_u(loss.code, loss.gamma_sm, s))


def loss_grad(loss, s):
    return _out(_core.dphi0_u(loss.code, loss.gamma_sm, s))


def conjugate_domain(loss):
    """Closed effective domain ``(lo, hi)`` of the base conjugate."""
    return float(_core.conj_lower(loss.code)), 0.0


def conjugate_value(loss, a):
    """``sup_z (a z - phi0(z))``; ``inf`` outside the domain."""
    return _out(_core.conj0_u(loss.code, loss.gamma_sm, a))


def mixup_loss_value(loss, s, y):
    return _out(_core.phi_mup_u(loss.code, loss.gamma_sm, s, y))


def mixup_loss_grad(loss, s, y):
    """Derivative of the mixup loss in ``s``; nondecreasing in ``s``."""
    return _out(_core.dphi_mup_u(loss.code, loss.gamma_sm, s, y))


def mixup_conjugate(loss, a, y, tol=DEFAULT_CONJ_TOL):
    """Convex conjugate of the mixup loss ``phi_mup(.; y)`` at ``a``.

    For ``|y| = 1`` this is the closed-form base conjugate (sign-flipped for
    ``y = -1``). Otherwise the conjugate is an infimal convolution of the two
    scaled base conjugates, minimised over u by golden-section search on the
    feasible interval until its width drops below ``tol``. Since the search
    returns the objective at a feasible point, the result never undershoots
    the true value.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _out(_core.mup_conj_u(loss.code, loss.gamma_sm, a, y, tol))


def mixup_conjugate_argmin_bounds(loss, y, alpha):
    """Interval of u searched when evaluating the conjugate at ``-alpha``.

    ``alpha`` is the dual variable, so the conjugate argument is ``-alpha``.
    The lower end is ``-inf`` for the quadratic hinge.

    Raises
    ------
    EmptyInterval
        If the two scaled domains do not intersect (``-alpha`` is outside the
        domain of the mixup conjugate).
    """
    if abs(y) >= 1.0:
        raise ValueError("bounds are only defined for |y| < 1")
    lo, hi = _core.infconv_bounds(loss.code, -float(alpha), float(y))
    if lo > hi:
        raise EmptyInterval(
            f"no feasible u for alpha={alpha}, y={y}: [{lo}, {hi}]"
        )
    return float(lo), float(hi)


def decomposed_conjugate(d, a):
    """``weight * phi0*(a / weight)``; constant time."""
    r = d.weight * _core.conj0_u(d.base.code, d.base.gamma_sm,
                                 np.asarray(a, dtype=float) / d.weight)
    return _out(r)


def smoothness_gap(loss, u, alpha, eta):
    """Slack in the strong-convexity inequality of the base conjugate.

    Returns ``eta c(-u) + (1-eta) c(-alpha) - c(-eta u - (1-eta) alpha)
    - gamma/2 (u - alpha)^2 (1-eta) eta`` which is nonnegative for valid
    inputs.
    """
    c = lambda v: conjugate_value(loss, v)  # noqa: E731
    mix = -eta * u - (1.0 - eta) * alpha
    lhs = eta * c(-u) + (1.0 - eta) * c(-alpha)
    quad = 0.5 * loss.gamma_sm * (u - alpha) ** 2 * (1.0 - eta) * eta
    out = lhs - c(mix) - quad
    if np.ndim(out) == 0 and math.isnan(out):
        return -math.inf
    return out
