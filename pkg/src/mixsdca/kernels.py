"""Positive-definite kernels and the dual-coefficient model representation."""
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .errors import DimensionMismatch

__all__ = [
    "KernelSpec",
    "DualModel",
    "kernel_eval",
    "gram_matrix",
    "gram_diag",
    "predict",
    "rkhs_norm_sq",
    "save_model",
    "load_model",
]

_KINDS = {"rbf": _core.RBF, "poly": _core.POLYNOMIAL, "linear": _core.LINEAR}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice and parameters.

    The RBF kernel is ``exp(-||x - x'||^2 / (2 width^2))``; the polynomial
    kernel is ``(<x, x'> + offset) ** degree``.
    """

    kind: str = "rbf"
    width: float = 1.0
    degree: int = 2
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.width > 0:
            raise ValueError("RBF width must be positive")
        if self.kind == "poly":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("polynomial degree must be an integer >= 1")
            if self.offset < 0:
                raise ValueError("polynomial offset must be >= 0")

    @classmethod
    def rbf(cls, width):
        return cls("rbf", width=float(width))

    @classmethod
    def polynomial(cls, degree, offset=0.0):
        return cls("poly", degree=int(degree), offset=float(offset))

    @classmethod
    def linear(cls):
        return cls("linear")

    @property
    def params(self):
        """Packed parameter vector understood by the compiled kernels."""
        return np.array([_KINDS[self.kind], self.width, self.degree,
                         self.offset], dtype=float)


def _check_dims(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(
            f"feature dimensions differ: {a.shape[-1]} vs {b.shape[-1]}"
        )


def kernel_eval(spec, x, xp):
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape != xp.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {xp.shape}")
    return float(_core.kernel_value(spec.params, x, xp))


def gram_matrix(spec, X, Y=None):
    """Kernel matrix between the rows of ``X`` and ``Y`` (default ``X``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sym = Y is None
    Y = X if sym else np.atleast_2d(np.asarray(Y, dtype=float))
    _check_dims(X, Y)
    G = X @ Y.T
    if spec.kind == "linear":
        K = G
    elif spec.kind == "poly":
        K = (G + spec.offset) ** spec.degree
    else:
        sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * G
        np.maximum(sq, 0.0, out=sq)
        K = np.exp(-sq / (2.0 * spec.width ** 2))
    if sym:
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, gram_diag(spec, X)[0])
    return np.ascontiguousarray(K)


def gram_diag(spec, xs):
    """Diagonal ``K_ii`` and ``R_mx = max_i sqrt(K_ii)``."""
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("need at least one point")
    if spec.kind == "rbf":
        d = np.ones(X.shape[0])
    else:
        sq = (X * X).sum(1)
        d = sq if spec.kind == "linear" else (sq + spec.offset) ** spec.degree
    return d, float(np.sqrt(d.max()))


@dataclass
class DualModel:
    """``f(x) = scale * sum_j coeffs[j] * k(anchors[j], x)``.

    For the naive and approximation solvers ``scale = 1 / (lam n)``; the
    decomposition solver folds the signed dual variables of duplicated
    examples into one coefficient per anchor.
    """

    kernel: KernelSpec
    anchors: np.ndarray
    coeffs: np.ndarray
    scale: float
    lam: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        self.coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if self.anchors.shape[0] != self.coeffs.shape[0]:
            raise ValueError("anchors and coeffs must have equal length")

    @property
    def dim(self):
        return self.anchors.shape[1]

    def __call__(self, x):
        return predict(self, x)


def predict(model, x):
    """Evaluate the model at one point (1-D input) or a batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    _check_dims(X, model.anchors)
    out = model.scale * (gram_matrix(model.kernel, X, model.anchors)
                         @ model.coeffs)
    return float(out[0]) if single else out


def rkhs_norm_sq(model, scores=None):
    """Squared RKHS norm; pass cached ``scores = f(anchors)`` to skip the Gram."""
    if scores is None:
        K = gram_matrix(model.kernel, model.anchors)
        val = model.scale ** 2 * (model.coeffs @ K @ model.coeffs)
    else:
        val = model.scale * float(np.dot(model.coeffs, scores))
    return max(float(val), 0.0)


def save_model(model, path):
    """Write the flat text model format (header lines, then one anchor per line)."""
    k = model.kernel
    lines = [f"kernel {k.kind}"]
    if k.kind == "rbf":
        lines.append(f"width {k.width!r}")
    elif k.kind == "poly":
        lines += [f"degree {k.degree}", f"offset {k.offset!r}"]
    lines += [
        f"lambda {model.lam!r}",
        f"scale {model.scale!r}",
        f"anchors {model.anchors.shape[0]}",
        f"dim {model.dim}",
    ]
    for c, row in zip(model.coeffs, model.anchors):
        lines.append(" ".join(["%.17g" % c] + ["%.17g" % v for v in row]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    header = {}
    i = 0
    while i < len(lines) and lines[i][0].isalpha():
        header[lines[i][0]] = lines[i][1]
        i += 1
    kind = header["kernel"]
    if kind == "rbf":
        spec = KernelSpec.rbf(float(header["width"]))
    elif kind == "poly":
        spec = KernelSpec.polynomial(int(header["degree"]),
                                     float(header["offset"]))
    else:
        spec = KernelSpec.linear()
    m, d = int(header["anchors"]), int(header["dim"])
    body = np.array(lines[i:], dtype=float).reshape(m, d + 1)
    return DualModel(spec, body[:, 1:], body[:, 0], float(header["scale"]),
                     float(header["lambda"]))
