import numpy as np
import pytest

from kroncond.matpoly import MatrixPolynomial

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.skipped and rep.when == "setup"):
        detail = dict(item.user_properties).get("detail", "")
        if rep.skipped:
            status = "SKIP"
            if isinstance(rep.longrepr, tuple):
                detail = rep.longrepr[2].removeprefix("Skipped: ")
        else:
            status = "PASS" if rep.passed else "FAIL"
        _criteria[marker.args[0]] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        status, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}".rstrip())


@pytest.fixture
def scalar_quad():
    """lam^2 - 1."""
    return MatrixPolynomial([[[-1.0]], [[0.0]], [[1.0]]])


def cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
