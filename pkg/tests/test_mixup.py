import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixsdca import (DimensionMismatch, EtaOutOfRange, LabelDomainError,
                     LabeledDataset, MixupConfig, TooFewExamples, augment,
                     mixup_pair)
from mixsdca.data import two_gaussians
from mixsdca.mixup import beta_draws, make_rng


def test_mixup_pair_examples():
    x1, x2 = np.array([0.0, 0.0]), np.array([2.0, 4.0])
    x, y = mixup_pair(x1, 1.0, x2, -1.0, 0.0)
    assert np.array_equal(x, x1) and y == 1.0
    x, y = mixup_pair(x1, 1.0, x2, -1.0, 1.0)
    assert np.array_equal(x, x2) and y == -1.0
    x, y = mixup_pair(x1, 1.0, x2, -1.0, 0.5)
    assert x.tolist() == [1.0, 2.0] and y == 0.0


def test_mixup_pair_errors():
    with pytest.raises(DimensionMismatch):
        mixup_pair([0, 0], 1, [1, 1, 1], -1, 0.5)
    with pytest.raises(EtaOutOfRange):
        mixup_pair([0, 0], 1, [1, 1], -1, 1.5)
    with pytest.raises(EtaOutOfRange):
        mixup_pair([0, 0], 1, [1, 1], -1, -0.1)


def test_dataset_validation():
    with pytest.raises(LabelDomainError):
        LabeledDataset(np.zeros((2, 1)), [1.0, 1.5])
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((3, 1)), [1.0, -1.0])


def test_config_validation():
    with pytest.raises(ValueError):
        MixupConfig(count=-1)
    with pytest.raises(ValueError):
        MixupConfig(beta_a=0.0)


def test_augment_count_zero_is_noop():
    base = two_gaussians(10, seed=1)
    out = augment(base, MixupConfig(0))
    assert np.array_equal(out.features, base.features)
    assert np.array_equal(out.labels, base.labels)


def test_augment_sizes():
    base = two_gaussians(23, seed=2)
    out = augment(base, MixupConfig(50, seed=3))
    assert len(out) == 73
    assert np.all(np.abs(out.labels) <= 1.0)
    assert np.array_equal(out.features[:23], base.features)


def test_augment_preconditions():
    with pytest.raises(TooFewExamples):
        augment(LabeledDataset([[0.0]], [1.0]), MixupConfig(3))
    with pytest.raises(LabelDomainError):
        augment(LabeledDataset([[0.0], [1.0]], [1.0, 0.5]), MixupConfig(3))


@given(st.integers(2, 30), st.integers(0, 40), st.integers(0, 2**32),
       st.floats(0.2, 5), st.floats(0.2, 5))
def test_augment_segment_and_labels(n, count, seed, a, b):
    base = two_gaussians(n, d=3, seed=seed % 1000)
    out, meta = augment(base, MixupConfig(count, a, b, seed), return_meta=True)
    i, j, eta = meta["i"], meta["j"], meta["eta"]
    assert np.all(i != j)
    assert np.all((0 <= i) & (i < n) & (0 <= j) & (j < n))
    X, y = base.features, base.labels
    new_x, new_y = out.features[n:], out.labels[n:]
    lo = np.minimum(X[i], X[j]) - 1e-12
    hi = np.maximum(X[i], X[j]) + 1e-12
    assert np.all((lo <= new_x) & (new_x <= hi))
    differ = y[i] != y[j]
    # recover eta from the label where the parents disagree
    eta_back = (y[i][differ] - new_y[differ]) / (y[i][differ] - y[j][differ])
    np.testing.assert_allclose(eta_back, eta[differ], atol=1e-12)
    assert np.all(new_y[~differ] == y[i][~differ])


def test_augment_deterministic():
    base = two_gaussians(15, seed=4)
    a = augment(base, MixupConfig(30, seed=99))
    b = augment(base, MixupConfig(30, seed=99))
    c = augment(base, MixupConfig(30, seed=100))
    assert a.features.tobytes() == b.features.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    assert a.labels.tobytes() != c.labels.tobytes()


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.5, 0.5), (2.0, 5.0)])
def test_beta_mean(a, b):
    eta = beta_draws(make_rng(7), a, b, 100_000)
    assert np.all((eta >= 0) & (eta <= 1))
    assert abs(eta.mean() - a / (a + b)) <= 0.01


def test_large_seed_accepted():
    base = two_gaussians(4, seed=0)
    out = augment(base, MixupConfig(2, seed=2**64 - 1))
    assert len(out) == 6
