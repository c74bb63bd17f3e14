import pytest

from romlab.params import Params, derive_params


@pytest.fixture(scope="session")
def default_params() -> Params:
    return derive_params(10**6, 3)


@pytest.fixture(scope="session")
def small_params() -> Params:
    """A scale where the reduction's failure events are rare (see README)."""
    return derive_params(10**5, 3, c=0.5, c1=0.01, c2=0.01, t_factor=6)


def make_params(n, t, w, w2=1, k=3, N=None) -> Params:
    """Hand-built Params for micro examples below the derive_params floor."""
    N = N if N is not None else n
    return Params(n=n, k=k, c=1.0, c1=0.5, c2=0.5, t_factor=1, t=t, w=w, N=N, w2=w2,
                  num_blocks=-(-n // w2))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("acceptance")
    if module is None or not module.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.LINES:
        terminalreporter.write_line(line)
