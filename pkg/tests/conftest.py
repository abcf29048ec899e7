import warnings

import pytest

from rbffd_ep.benchmarks.cases import annulus, timoshenko


@pytest.fixture(scope="session")
def annulus_case():
    return annulus()


@pytest.fixture(scope="session")
def coarse_annulus_cloud(annulus_case):
    return annulus_case.cloud(0.1, seed=0)


@pytest.fixture(scope="session")
def beam_cloud():
    return timoshenko().cloud(0.1, seed=0)


@pytest.fixture(autouse=True)
def _quiet_config_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        yield


_VERDICTS: dict = {}


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number: int, title: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} ({title}): {detail}"
        _VERDICTS[number] = line
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
