"""Dataset files, standardisation, cross-validation folds and AUROC."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateLabels, LabelDomainError, ParseError
from .mixup import LabeledDataset, make_rng

__all__ = [
    "DatasetFile",
    "CVPlan",
    "Standardizer",
    "load",
    "save",
    "standardize",
    "auroc",
    "auroc_pairs",
    "auroc_rank",
    "cv_folds",
    "two_gaussians",
    "spambase_like",
    "subsample",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetFile:
    path: str
    format: str = "csv"
    label_column: int = 0
    delimiter: str = ","
    n_features: int = None
    binary: bool = False

    def __post_init__(self):
        if self.format not in ("csv", "libsvm"):
            raise ValueError(f"unknown format {self.format!r}")


def _finish_labels(y, binary, source):
    y = np.asarray(y, dtype=float)
    vals = set(np.unique(y).tolist())
    if vals and vals <= {0.0, 1.0} and 0.0 in vals:
        log.warning("%s: labels in {0, 1} remapped to {-1, +1}", source)
        y = 2.0 * y - 1.0
    if np.any(np.abs(y) > 1.0):
        raise LabelDomainError(f"{source}: labels outside [-1, 1]")
    if binary and not np.all(np.abs(y) == 1.0):
        raise LabelDomainError(f"{source}: binary labels must be -1 or +1")
    return y


def _parse_float(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"cannot parse {tok!r} as a number", lineno) from None


def _load_csv(f):
    rows = []
    width = None
    with open(f.path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            toks = line.split(f.delimiter)
            if width is None:
                width = len(toks)
            elif len(toks) != width:
                raise ParseError(
                    f"expected {width} fields, found {len(toks)}", lineno)
            rows.append([_parse_float(t, lineno) for t in toks])
    if not rows:
        raise ParseError("no data rows")
    arr = np.array(rows)
    col = f.label_column % arr.shape[1]
    y = arr[:, col]
    X = np.delete(arr, col, axis=1)
    return X, y


def _load_libsvm(f):
    labels, entries = [], []
    dmax = 0
    with open(f.path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            labels.append(_parse_float(toks[0], lineno))
            row = {}
            for tok in toks[1:]:
                idx, sep, val = tok.partition(":")
                if not sep or not idx.isdigit() or int(idx) < 1:
                    raise ParseError(f"bad feature token {tok!r}", lineno)
                row[int(idx)] = _parse_float(val, lineno)
                dmax = max(dmax, int(idx))
            entries.append(row)
    if not labels:
        raise ParseError("no data rows")
    d = f.n_features or dmax
    if dmax > d:
        raise ParseError(f"feature index {dmax} exceeds n_features={d}")
    X = np.zeros((len(labels), d))
    for r, row in enumerate(entries):
        for idx, val in row.items():
            X[r, idx - 1] = val
    return X, np.array(labels)


def load(f):
    """Parse a CSV or LIBSVM file into a :class:`LabeledDataset`.

    Labels in {0, 1} are remapped to {-1, +1} with a warning.
    """
    if isinstance(f, str):
        f = DatasetFile(f)
    X, y = _load_csv(f) if f.format == "csv" else _load_libsvm(f)
    return LabeledDataset(X, _finish_labels(y, f.binary, f.path))


def save(ds, path, format="csv", delimiter=","):
    """Write ``ds`` with the label first; numbers use 17 significant digits."""
    fmt = "%.17g"
    with open(path, "w") as fh:
        for x, y in zip(ds.features, ds.labels):
            if format == "csv":
                fh.write(delimiter.join([fmt % y] + [fmt % v for v in x]))
            else:
                feats = " ".join(f"{k + 1}:{fmt % v}"
                                 for k, v in enumerate(x) if v != 0.0)
                fh.write((fmt % y) + (" " + feats if feats else ""))
            fh.write("\n")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def apply(self, ds):
        return LabeledDataset(self.transform(ds.features), ds.labels)


def standardize(ds):
    """Zero mean, unit variance per feature; constant features keep scale 1."""
    if len(ds) < 2:
        raise ValueError("standardize needs at least two examples")
    mean = ds.features.mean(axis=0)
    sd = ds.features.std(axis=0)
    scale = np.where(sd > 0, sd, 1.0)
    tr = Standardizer(mean, scale)
    return tr.apply(ds), tr


def _split(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels > 0]
    neg = scores[labels < 0]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateLabels("AUROC needs both positive and negative labels")
    return pos, neg


def auroc_pairs(scores, labels):
    """Fraction of (positive, negative) pairs ranked correctly; ties count 1/2."""
    pos, neg = _split(scores, labels)
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def auroc_rank(scores, labels):
    """Mann-Whitney U via average ranks, O(m log m)."""
    pos, neg = _split(scores, labels)
    r = rankdata(np.concatenate([pos, neg]))
    u = r[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def auroc(scores, labels):
    pos, neg = _split(scores, labels)
    if pos.size * neg.size <= 250_000:
        return auroc_pairs(scores, labels)
    return auroc_rank(scores, labels)


@dataclass(frozen=True)
class CVPlan:
    scheme: str = "loo"
    k: int = None
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("loo", "kfold"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "kfold" and (self.k is None or self.k < 2):
            raise ValueError("k-fold needs k >= 2")


def cv_folds(n, plan=None):
    """List of ``(train_idx, test_idx)`` pairs; deterministic given the seed."""
    plan = plan or CVPlan()
    if n < 2:
        raise ValueError("cross-validation needs n >= 2")
    idx = np.arange(n)
    if plan.scheme == "loo":
        return [(np.delete(idx, i), idx[i:i + 1]) for i in range(n)]
    if plan.k > n:
        raise ValueError(f"k={plan.k} exceeds n={n}")
    perm = make_rng(plan.seed).permutation(n)
    out = []
    for test in np.array_split(perm, plan.k):
        test = np.sort(test)
        out.append((np.setdiff1d(idx, test), test))
    return out


def subsample(ds, size, seed=0):
    if size >= len(ds):
        return ds
    idx = np.sort(make_rng(seed).choice(len(ds), size, replace=False))
    return ds.subset(idx)


def two_gaussians(n, d=5, separation=2.0, seed=0):
    """Balanced two-class Gaussian data with means at +-separation/2 per axis."""
    rng = make_rng(seed)
    n_pos = (n + 1) // 2
    y = np.r_[np.ones(n_pos), -np.ones(n - n_pos)]
    X = rng.standard_normal((n, d)) + 0.5 * separation * y[:, None]
    return LabeledDataset(X, y)


def spambase_like(n=4601, seed=0):
    """Synthetic stand-in shaped like the UCI spambase table.

    57 nonnegative features (48 sparse word frequencies, 6 character
    frequencies, 3 heavy-tailed capital-run statistics), roughly 39% positive.
    Informative features shift in frequency and rate between classes.
    """
    rng = make_rng(seed)
    y = np.where(rng.random(n) < 0.394, 1.0, -1.0)
    pos = y > 0
    X = np.zeros((n, 57))
    base_p = rng.uniform(0.05, 0.4, 54)
    lift = rng.uniform(-0.6, 1.2, 54)
    rate = rng.uniform(0.1, 1.0, 54)
    for k in range(54):
        p_k = np.clip(base_p[k] * np.where(pos, 1.0 + lift[k], 1.0), 0.01, 0.95)
        present = rng.random(n) < p_k
        mag = rng.exponential(rate[k] * np.where(pos, 1.0 + 0.5 * lift[k], 1.0))
        X[:, k] = np.where(present, mag, 0.0)
    for k, (mu, sig) in enumerate([(1.0, 0.6), (2.5, 1.0), (5.0, 1.2)]):
        X[:, 54 + k] = rng.lognormal(mu + 0.5 * pos, sig)
    return LabeledDataset(X, y)
