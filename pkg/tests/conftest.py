import pytest

from tariffkit import _kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    # trigger any jit compilation once so timed tests measure steady state
    _kernels.warmup()
