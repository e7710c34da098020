import mpmath as mp
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _reset_mp():
    # tests that change the global precision must not leak into others
    prec = mp.mp.prec
    yield
    mp.mp.prec = prec


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: (int(k.split("-")[0]), k)):
        terminalreporter.write_line(RESULTS[key])
