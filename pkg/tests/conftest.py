import numpy as np
import pytest

from deepguard import _pykernels

try:
    from deepguard import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
