import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gramdep.kernel import rbf_gram, select_bandwidth

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def random_unit_trace_psd(rng, n, rank=None):
    """Random symmetric PSD matrix with unit trace (not necessarily a Gram)."""
    rank = n if rank is None else rank
    m = rng.standard_normal((n, rank))
    a = m @ m.T
    return a / np.trace(a)


def random_gram(rng, n, dim=1, scale=None):
    """Normalized RBF Gram of random Gaussian samples."""
    x = rng.standard_normal((n, dim))
    sigma = select_bandwidth(x) * (scale if scale is not None else rng.uniform(0.5, 2.0))
    return rbf_gram(x, sigma)


def mixed_grams(rng, n, L):
    """L Grams of variables sharing a latent factor with random strength."""
    base = rng.standard_normal((n, 1))
    out = []
    for _ in range(L):
        w = rng.uniform(0.0, 1.0)
        x = w * base + (1.0 - w) * rng.standard_normal((n, int(rng.integers(1, 3))))
        out.append(rbf_gram(x, select_bandwidth(x)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":abc"))):
            terminalreporter.write_line(line)
