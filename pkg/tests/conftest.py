import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from boltzspec.dynamics import SupportWarning
from boltzspec.spectral_core import SpectralField, TorusGrid, hermitian_part

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SQRT2PI = math.sqrt(2.0) * math.pi


@pytest.fixture(autouse=True)
def _quiet_support_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SupportWarning)
        yield


def random_field(N, d=2, L=math.pi, seed=0, mass_mode=1.0, decay=0.0):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(d, N, L)
    c = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    if decay:
        k2 = sum(np.meshgrid(*([np.arange(-N, N + 1) ** 2] * d), indexing="ij"))
        c *= np.exp(-decay * k2)
    c = hermitian_part(c)
    c[(N,) * d] = mass_mode
    return SpectralField(grid, c)


def pytest_terminal_summary(terminalreporter):
    import sys

    results = {}
    for mod in list(sys.modules.values()):
        results.update(getattr(mod, "ACCEPTANCE_RESULTS", None) or {})
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
