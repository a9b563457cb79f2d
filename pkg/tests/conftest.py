import sys
import numpy as np
import pytest

from carlsim.model import ModelParams
from carlsim.spectral import discriminant


def random_samples(n=200, seed=20261019):
    """Deterministic (chi, delta, tau) samples over the validation box."""
    rng = np.random.default_rng(seed)
    chis = rng.uniform(0.0, 2.0, n)
    deltas = rng.uniform(-4.0, 4.0, n)
    taus = rng.uniform(0.0, 10.0, n)
    return list(zip(chis, deltas, taus))


def threshold_chi(delta, lo=0.0, hi=3.0, iters=200):
    """Coupling on the stability boundary at fixed delta, by bisection on the
    sign of the cubic discriminant (positive: three real roots)."""
    assert discriminant(ModelParams(lo, delta)) > 0
    assert discriminant(ModelParams(hi, delta)) < 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if discriminant(ModelParams(mid, delta)) > 0:
            lo = mid
        else:
            hi = mid
    return lo


@pytest.fixture(scope="session")
def samples():
    return random_samples()


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
