import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bolab.spectral import Grid, SpectralField

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE = []


def random_field(grid: Grid, rng, decay=1.0, top=None, mean=0.0) -> SpectralField:
    """Real field with random phases, |c_n| ~ exp(-decay |n|) on 1 <= n <= top."""
    top = grid.max_mode if top is None else top
    modes = {0: mean}
    for n in range(1, top + 1):
        c = np.exp(-decay * n) * (rng.normal() + 1j * rng.normal())
        modes[n] = c
        modes[-n] = np.conj(c)
    return SpectralField.from_modes(grid, modes, real=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Records one line per acceptance criterion for the terminal summary."""

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
