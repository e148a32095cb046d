import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fibrand import _pykernels, kernels
from fibrand.verify import group_table

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

KERNEL_NAMES = ["perm_chain", "mat_chain", "cycle_type", "group_convolve", "right_shift_norms"]


@pytest.fixture(params=["native", "python"])
def backend(request, monkeypatch):
    """Run a test once with the selected kernels and once with the pure-Python fallback."""
    if request.param == "python":
        for name in KERNEL_NAMES:
            monkeypatch.setattr(kernels, name, getattr(_pykernels, name))
    return request.param


@pytest.fixture(scope="session")
def s4():
    return group_table("S4")


@pytest.fixture(scope="session")
def s3():
    return group_table("S3")


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for i in sorted(results):
            terminalreporter.write_line(results[i])
