import numpy as np
import pytest

from qssa_cm.kinetics import ParameterSet


@pytest.fixture
def fig3_left():
    return ParameterSet.of(k1=1, k_minus1=3, k2=1, E_T=1, X_T=1)


@pytest.fixture
def fig1_consistent():
    return ParameterSet.of(k1=1, k_minus1=1, k2=4, E_T=89, X_T=100)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.VERDICTS):
            terminalreporter.write_line(test_acceptance.VERDICTS[n])
