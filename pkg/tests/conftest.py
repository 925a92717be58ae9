import pytest

from femtoshare import BoundContext, NetworkParams


@pytest.fixture(scope="session")
def params30():
    return NetworkParams.from_expected_fap_count(30)


@pytest.fixture(scope="session")
def params100():
    return NetworkParams.from_expected_fap_count(100)


@pytest.fixture(scope="session")
def ctx30(params30):
    return BoundContext.from_params(params30)


@pytest.fixture(scope="session")
def ctx100(params100):
    return BoundContext.from_params(params100)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for n, m in sys.modules.items()
                if n.endswith("test_acceptance")), None)
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
