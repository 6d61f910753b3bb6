import numpy as np
import pytest

from singlegap.gaudin import default_table, gap_function_painleve


@pytest.fixture(scope="session")
def fredholm_table():
    return default_table()


@pytest.fixture(scope="session")
def painleve_table():
    return gap_function_painleve()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def gustavsson_report():
    from singlegap.harness import ExperimentConfig, run_experiment

    config = ExperimentConfig(experiment="gustavsson", n=(200, 1000), samples=10_000, seed=1)
    return run_experiment(config.validate())


_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def emit(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)
