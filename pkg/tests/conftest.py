import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def gaussian(cx, cy, sigma):
    """Vectorised Gaussian bump ``f(x, y)``."""
    def f(x, y):
        return np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma * sigma))
    return f


def smooth_family(seed, count, sigma=(0.07, 0.1), spread=0.3):
    """Random smooth test functions: modulated Gaussian bumps well inside the unit disk."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        cx, cy = rng.uniform(-spread, spread, 2)
        s = rng.uniform(*sigma)
        kx, ky = rng.uniform(-4, 4, 2)
        amp = rng.uniform(0.5, 1.5)

        def f(x, y, cx=cx, cy=cy, s=s, kx=kx, ky=ky, amp=amp):
            return amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s)) * np.cos(kx * x + ky * y)
        out.append(f)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
