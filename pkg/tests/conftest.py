import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mixsdca import KernelSpec, LossSpec, MixupConfig, Problem, augment
from mixsdca.data import two_gaussians
from mixsdca.solvers import _warmup

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

LOSS_NAMES = ("bce", "smoothed-hinge", "quadratic-hinge")


@pytest.fixture(scope="session", autouse=True)
def compiled():
    _warmup()


@pytest.fixture(params=LOSS_NAMES)
def loss(request):
    return LossSpec.from_name(request.param)


def small_problem(n_base=20, n_mix=20, loss="bce", lam_over_n=1.0, seed=0,
                  width=1.5, gram_cache=True):
    base = two_gaussians(n_base, d=3, separation=1.5, seed=seed)
    ds = augment(base, MixupConfig(n_mix, seed=seed + 1))
    return Problem(ds, LossSpec.from_name(loss), KernelSpec.rbf(width),
                   lam_over_n / len(ds), gram_cache=gram_cache)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


def record(number, passed, detail):
    """Store one acceptance line; printed in the terminal summary."""
    ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE[number])
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
