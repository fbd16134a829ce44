import numpy as np
import pytest
from hypothesis import settings

from phylink.channel import build_covariances
from phylink.config import ChannelModelConfig
from phylink.grid import make_pilot_mask

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_mask():
    return make_pilot_mask(14, 72, (1, 10))


@pytest.fixture(scope="session")
def small_cov():
    return build_covariances(ChannelModelConfig(n_s=2, n_t=14, n_f=24, rho_t=0.99, tau_rms=0.05, rho_s=0.5))


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict(request):
    """Record one acceptance line; call as ``verdict(n, ok, detail)`` before asserting."""

    def record(n: int, ok: bool, detail: str):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
