import numpy as np
import pytest
from hypothesis import settings

from nonparaxial.model import GridSpec

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def grid():
    return GridSpec.centered(2048, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def band_limited(grid, rng, k_max=4.0, width=6.0):
    """Random smooth field, band limited in k and localized in x."""
    k = grid.k
    spec = (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)) * (np.abs(k) < k_max)
    vals = np.fft.ifft(np.fft.ifftshift(spec))
    vals = vals * np.exp(-0.5 * (grid.x / width) ** 2)
    return vals / np.sqrt(np.sum(np.abs(vals) ** 2) * grid.dx)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
