import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_binary_weights(rng, n, density=0.3):
    """Random 0/1 matrix, zero diagonal, at least one neighbour per row."""
    w = (rng.random((n, n)) < density).astype(float)
    np.fill_diagonal(w, 0.0)
    for i in range(n):
        if not w[i].any():
            j = (i + 1 + rng.integers(n - 1)) % n
            w[i, j] = 1.0
    return w


def pytest_terminal_summary(terminalreporter):
    import sys as _sys

    mod = _sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
