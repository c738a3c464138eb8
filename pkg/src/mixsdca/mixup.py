"""Datasets with real-valued labels and mixup augmentation."""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EtaOutOfRange, LabelDomainError, TooFewExamples

__all__ = [
    "LabeledDataset",
    "MixupConfig",
    "mixup_pair",
    "augment",
    "beta_draws",
    "make_rng",
]


@dataclass
class LabeledDataset:
    """Feature matrix (n, d) and labels in [-1, 1]."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} feature rows but "
                f"{self.labels.shape[0]} labels"
            )
        if np.any(np.abs(self.labels) > 1.0):
            raise LabelDomainError("labels must lie in [-1, 1]")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def is_binary(self):
        return bool(np.all(np.abs(self.labels) == 1.0))

    def subset(self, idx):
        idx = np.asarray(idx)
        return LabeledDataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class MixupConfig:
    count: int = 0
    beta_a: float = 1.0
    beta_b: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not (self.beta_a > 0 and self.beta_b > 0):
            raise ValueError("Beta parameters must be positive")


def make_rng(seed):
    """Counter-based generator (Philox) so draws are platform independent."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def beta_draws(rng, a, b, size):
    """Beta(a, b) samples as a ratio of two Gamma draws."""
    g1 = rng.standard_gamma(a, size)
    g2 = rng.standard_gamma(b, size)
    tot = g1 + g2
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(tot > 0, g1 / tot, 0.5)
    return eta


def mixup_pair(x1, y1, x2, y2, eta):
    """Convex combination ``((1-eta) x1 + eta x2, (1-eta) y1 + eta y2)``."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise DimensionMismatch(f"shapes differ: {x1.shape} vs {x2.shape}")
    if not 0.0 <= eta <= 1.0:
        raise EtaOutOfRange(f"eta must be in [0, 1], got {eta}")
    return (1.0 - eta) * x1 + eta * x2, (1.0 - eta) * y1 + eta * y2


def augment(base, cfg, return_meta=False):
    """Append ``cfg.count`` mixup examples to ``base``.

    Each synthetic example mixes an ordered pair ``(i, j)``, ``i != j``, drawn
    uniformly, with ``eta ~ Beta(beta_a, beta_b)``. With ``return_meta`` the
    parent indices and the drawn etas are returned as well.
    """
    n = len(base)
    if n < 2:
        raise TooFewExamples("mixup needs at least two base examples")
    if not base.is_binary:
        raise LabelDomainError("mixup base labels must be -1 or +1")
    rng = make_rng(cfg.seed)
    m = cfg.count
    i = rng.integers(0, n, size=m)
    j = rng.integers(0, n - 1, size=m)
    j = j + (j >= i)
    eta = beta_draws(rng, cfg.beta_a, cfg.beta_b, m)
    X, y = base.features, base.labels
    e = eta[:, None]
    Xn = (1.0 - e) * X[i] + e * X[j]
    yn = (1.0 - eta) * y[i] + eta * y[j]
    out = LabeledDataset(np.vstack([X, Xn]), np.concatenate([y, yn]))
    if return_meta:
        return out, {"i": i, "j": j, "eta": eta}
    return out
